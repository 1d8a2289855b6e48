//! Config-driven experiments: α-sweeps of tr h(B_{α,μ}), least-squares
//! extraction of the asymptotic coefficients against the model
//! a·α + b·log α + c, gap-boundedness checks, and CSV/JSON reporting.
//!
//! Everything is deterministic: no seeds, fixed summation orders, and CSV
//! floats printed with 17 significant digits so repeated runs are
//! byte-identical.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bands::{Classification, SpectralModel};
use crate::error::{Error, Result};
use crate::fibre::{potential_from_spec, PeriodicPotential, PotentialSpec};
use crate::finsec::{
    assemble_section, section_spectrum, trace_h, widom_coefficient, TestFunction,
};
use crate::kernel::KernelEvaluator;

/// Potential stanza of the config: exactly one of `preset` or
/// `coefficients` (list of [m, re, im]).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<(i64, f64, f64)>>,
}

impl PotentialConfig {
    pub fn preset(name: &str) -> Self {
        PotentialConfig {
            preset: Some(name.to_string()),
            coefficients: None,
        }
    }

    pub fn build(&self) -> Result<PeriodicPotential> {
        match (&self.preset, &self.coefficients) {
            (Some(name), None) => {
                let order = if name.trim() == "zero" { 0 } else { 1 };
                potential_from_spec(&PotentialSpec::Preset(name.clone()), order)
            }
            (None, Some(list)) => {
                let order = list
                    .iter()
                    .map(|(m, _, _)| m.unsigned_abs() as usize)
                    .max()
                    .unwrap_or(0);
                let coeffs: Vec<(i64, Complex64)> = list
                    .iter()
                    .map(|&(m, re, im)| (m, Complex64::new(re, im)))
                    .collect();
                potential_from_spec(&PotentialSpec::Coefficients(coeffs), order)
            }
            _ => Err(Error::ConfigInvalid(
                "potential must specify exactly one of `preset` or `coefficients`".into(),
            )),
        }
    }

    pub fn label(&self) -> String {
        match (&self.preset, &self.coefficients) {
            (Some(name), _) => name.clone(),
            (_, Some(list)) => format!("coefficients[{}]", list.len()),
            _ => "invalid".into(),
        }
    }
}

fn default_spacing() -> f64 {
    0.125
}
fn default_cutoff() -> usize {
    64
}
fn default_edge_tol() -> f64 {
    crate::bands::DEFAULT_EDGE_TOL
}
fn default_touch_tol() -> f64 {
    crate::bands::DEFAULT_TOUCH_TOL
}

/// A sweep config; JSON fields: potential, mu, alphas, spacing, cutoff,
/// functions, edge_tol, touch_tol (+ optional classification override).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialConfig,
    pub mu: f64,
    pub alphas: Vec<f64>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    pub functions: Vec<String>,
    #[serde(default = "default_edge_tol")]
    pub edge_tol: f64,
    #[serde(default = "default_touch_tol")]
    pub touch_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.functions.is_empty() {
            return Err(Error::ConfigInvalid("at least one function required".into()));
        }
        for f in &self.functions {
            TestFunction::parse(f)?;
        }
        if self.alphas.is_empty() {
            return Err(Error::ConfigInvalid("alphas must be non-empty".into()));
        }
        if self.alphas[0] < 5.0 {
            return Err(Error::ConfigInvalid("alphas must start at 5 or above".into()));
        }
        for w in self.alphas.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::ConfigInvalid(
                    "alphas must be strictly increasing".into(),
                ));
            }
        }
        if !(self.spacing > 0.0) {
            return Err(Error::ConfigInvalid("spacing must be positive".into()));
        }
        if !self.mu.is_finite() {
            return Err(Error::ConfigInvalid("mu must be finite".into()));
        }
        if let Some(c) = &self.classification {
            if c != "interior" && c != "gap" {
                return Err(Error::ConfigInvalid(
                    "classification override must be `interior` or `gap`".into(),
                ));
            }
        }
        self.potential.build()?;
        Ok(())
    }

    /// Energy cutoff for the band structure behind this config.
    pub fn e_max(&self) -> f64 {
        2.0 * self.mu.abs() + 2.0
    }

    /// FNV-1a fingerprint of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).unwrap_or_default();
        let mut h: u64 = 0xcbf29ce484222325;
        for b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// One sweep record; wall time is diagnostic metadata and stays out of the
/// deterministic CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub function: String,
    pub trace: f64,
    pub eigencount: usize,
    pub wall_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepMeta {
    pub config_hash: String,
    pub potential: String,
    pub mu: f64,
    pub classification: String,
    pub n_mu: f64,
    /// (function id, W(h), h(1)) per configured function
    pub functions: Vec<(String, f64, f64)>,
    pub spacing: f64,
    pub cutoff: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub meta: SweepMeta,
}

/// 17 significant digits; enough to round-trip any f64.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub const CSV_HEADER: &str = "alpha,function,trace,eigencount";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt17(r.alpha),
                r.function,
                fmt17(r.trace),
                r.eigencount
            );
        }
        out
    }

    pub fn from_csv(text: &str, meta: SweepMeta) -> Result<SweepResult> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                if line.trim() != CSV_HEADER {
                    return Err(Error::ConfigInvalid(format!(
                        "unexpected CSV header `{line}`"
                    )));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::ConfigInvalid(format!("bad CSV row `{line}`")));
            }
            rows.push(SweepRow {
                alpha: parts[0]
                    .parse()
                    .map_err(|_| Error::ConfigInvalid(format!("bad alpha `{}`", parts[0])))?,
                function: parts[1].to_string(),
                trace: parts[2]
                    .parse()
                    .map_err(|_| Error::ConfigInvalid(format!("bad trace `{}`", parts[2])))?,
                eigencount: parts[3]
                    .parse()
                    .map_err(|_| Error::ConfigInvalid(format!("bad count `{}`", parts[3])))?,
                wall_s: 0.0,
            });
        }
        Ok(SweepResult { rows, meta })
    }
}

/// Run the sweep; when `csv_path` is given the CSV is written incrementally,
/// one α at a time, so partial runs stay usable.
pub fn run_sweep_to(cfg: &ExperimentConfig, csv_path: Option<&Path>) -> Result<SweepResult> {
    cfg.validate()?;
    let potential = cfg.potential.build()?;
    let model = SpectralModel::new(&potential, cfg.e_max(), cfg.cutoff, cfg.touch_tol)?;

    let classification = match cfg.classification.as_deref() {
        Some("interior") => {
            // honor the override only if μ is actually inside some band
            match model.classify(cfg.mu, cfg.edge_tol)? {
                Classification::Interior { genuine_index } => {
                    Classification::Interior { genuine_index }
                }
                other => other,
            }
        }
        Some("gap") => Classification::Gap,
        _ => model.classify(cfg.mu, cfg.edge_tol)?,
    };
    if classification == Classification::Edge {
        return Err(Error::EdgeMu { mu: cfg.mu });
    }

    let functions: Vec<TestFunction> = cfg
        .functions
        .iter()
        .map(|f| TestFunction::parse(f))
        .collect::<Result<_>>()?;
    let mut fn_meta = Vec::new();
    for f in &functions {
        fn_meta.push((f.id(), widom_coefficient(f)?, f.at_one()));
    }

    let n_mu = model.ids(cfg.mu)?;
    let alpha_max = *cfg.alphas.last().unwrap();
    let ev = KernelEvaluator::for_window(&model, cfg.mu, alpha_max, cfg.edge_tol)?;

    let meta = SweepMeta {
        config_hash: cfg.hash(),
        potential: cfg.potential.label(),
        mu: cfg.mu,
        classification: classification.label().to_string(),
        n_mu,
        functions: fn_meta,
        spacing: cfg.spacing,
        cutoff: cfg.cutoff,
    };

    let mut writer = match csv_path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            writeln!(w, "{CSV_HEADER}")?;
            Some(w)
        }
        None => None,
    };

    let mut rows = Vec::new();
    for &alpha in &cfg.alphas {
        let t0 = Instant::now();
        let section = assemble_section(&ev, alpha, cfg.spacing)?;
        let spectrum = section_spectrum(&section)?;
        drop(section);
        let wall = t0.elapsed().as_secs_f64();
        let eigencount = spectrum.count_above_half();
        for f in &functions {
            let row = SweepRow {
                alpha,
                function: f.id(),
                trace: trace_h(&spectrum, f),
                eigencount,
                wall_s: wall,
            };
            if let Some(w) = writer.as_mut() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    fmt17(row.alpha),
                    row.function,
                    fmt17(row.trace),
                    row.eigencount
                )?;
                w.flush()?;
            }
            rows.push(row);
        }
    }
    Ok(SweepResult { rows, meta })
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep_to(cfg, None)
}

// ---------------------------------------------------------------------------
// asymptotic fit
// ---------------------------------------------------------------------------

/// Fitted coefficients of trace ≈ a·α + b·log α + c and their deviations
/// from the asymptotic targets a* = 2 h(1) N(μ,H), b* = W(h).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub function: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub residual_rms: f64,
    pub target_a: f64,
    pub target_b: f64,
    /// relative when the target is nonzero, absolute otherwise
    pub deviation_a: f64,
    pub deviation_b: f64,
    pub rows_used: usize,
    pub alpha_min: f64,
    pub linear_dropped: bool,
}

/// Solve a small least-squares problem by normal equations with column
/// scaling and partial pivoting.
fn solve_ls(design: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let cols = design.len();
    let rows = rhs.len();
    let scales: Vec<f64> = design
        .iter()
        .map(|c| c.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1e-300))
        .collect();
    let mut ata = vec![vec![0.0; cols]; cols];
    let mut atb = vec![0.0; cols];
    for i in 0..cols {
        for j in 0..cols {
            ata[i][j] = (0..rows)
                .map(|r| design[i][r] / scales[i] * design[j][r] / scales[j])
                .sum();
        }
        atb[i] = (0..rows).map(|r| design[i][r] / scales[i] * rhs[r]).sum();
    }
    // gaussian elimination with partial pivoting
    for p in 0..cols {
        let (pivot_row, pivot) = (p..cols)
            .map(|r| (r, ata[r][p].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if pivot < 1e-12 {
            return Err(Error::FitRankDeficient(format!(
                "normal equations singular at column {p}"
            )));
        }
        ata.swap(p, pivot_row);
        atb.swap(p, pivot_row);
        for r in p + 1..cols {
            let f = ata[r][p] / ata[p][p];
            for c in p..cols {
                ata[r][c] -= f * ata[p][c];
            }
            atb[r] -= f * atb[p];
        }
    }
    let mut beta = vec![0.0; cols];
    for p in (0..cols).rev() {
        let mut s = atb[p];
        for c in p + 1..cols {
            s -= ata[p][c] * beta[c];
        }
        beta[p] = s / ata[p][p];
    }
    Ok(beta.iter().zip(&scales).map(|(b, s)| b / s).collect())
}

/// Least squares of trace against a·α + b·log α + c over rows with
/// α >= alpha_min. When h(1) = 0 the theorem forces a = 0 and the linear
/// column is dropped to condition the fit.
pub fn fit_asymptotics(
    res: &SweepResult,
    function_id: &str,
    alpha_min: f64,
) -> Result<FitReport> {
    let h = TestFunction::parse(function_id)?;
    let pts: Vec<(f64, f64)> = res
        .rows
        .iter()
        .filter(|r| r.function == function_id && r.alpha >= alpha_min)
        .map(|r| (r.alpha, r.trace))
        .collect();
    if pts.len() < 4 {
        return Err(Error::FitTooFewRows {
            alpha_min,
            found: pts.len(),
        });
    }
    let mut distinct: Vec<f64> = pts.iter().map(|p| p.0).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let h1 = h.at_one();
    let drop_linear = h1 == 0.0;
    let n_params = if drop_linear { 2 } else { 3 };
    if distinct.len() < n_params + 1 {
        return Err(Error::FitRankDeficient(format!(
            "{} distinct alphas for {} parameters",
            distinct.len(),
            n_params
        )));
    }
    let rhs: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let col_alpha: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let col_log: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let col_one: Vec<f64> = vec![1.0; pts.len()];
    let design: Vec<Vec<f64>> = if drop_linear {
        vec![col_log.clone(), col_one]
    } else {
        vec![col_alpha.clone(), col_log.clone(), col_one]
    };
    let beta = solve_ls(&design, &rhs)?;
    let (a, b, c) = if drop_linear {
        (0.0, beta[0], beta[1])
    } else {
        (beta[0], beta[1], beta[2])
    };
    let mut ss = 0.0;
    for (i, &(alpha, y)) in pts.iter().enumerate() {
        let _ = i;
        let fit = a * alpha + b * alpha.ln() + c;
        ss += (y - fit) * (y - fit);
    }
    let residual_rms = (ss / pts.len() as f64).sqrt();
    let (target_b, meta_h1) = res
        .meta
        .functions
        .iter()
        .find(|(id, _, _)| id == function_id)
        .map(|(_, w, h1)| (*w, *h1))
        .unwrap_or((widom_coefficient(&h)?, h1));
    let target_a = 2.0 * meta_h1 * res.meta.n_mu;
    let rel = |got: f64, want: f64| {
        if want != 0.0 {
            (got - want).abs() / want.abs()
        } else {
            (got - want).abs()
        }
    };
    Ok(FitReport {
        function: function_id.to_string(),
        a,
        b,
        c,
        residual_rms,
        target_a,
        target_b,
        deviation_a: rel(a, target_a),
        deviation_b: rel(b, target_b),
        rows_used: pts.len(),
        alpha_min,
        linear_dropped: drop_linear,
    })
}

// ---------------------------------------------------------------------------
// gap boundedness
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapCheckReport {
    pub function: String,
    pub pass: bool,
    pub range: f64,
    pub bound_window: f64,
    /// trace − 2 α h(1) N(μ,H) per α
    pub centered: Vec<(f64, f64)>,
}

/// Pass iff max − min of trace − 2αh(1)N over the sweep is within the
/// window. Requires a Gap classification.
pub fn gap_boundedness_check(
    res: &SweepResult,
    function_id: &str,
    bound_window: f64,
) -> Result<GapCheckReport> {
    if res.meta.classification != "gap" {
        return Err(Error::NotGap(res.meta.classification.clone()));
    }
    let h1 = res
        .meta
        .functions
        .iter()
        .find(|(id, _, _)| id == function_id)
        .map(|(_, _, h1)| *h1)
        .unwrap_or(TestFunction::parse(function_id)?.at_one());
    let centered: Vec<(f64, f64)> = res
        .rows
        .iter()
        .filter(|r| r.function == function_id)
        .map(|r| (r.alpha, r.trace - 2.0 * r.alpha * h1 * res.meta.n_mu))
        .collect();
    if centered.is_empty() {
        return Err(Error::FitTooFewRows {
            alpha_min: 0.0,
            found: 0,
        });
    }
    let hi = centered.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = centered.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let range = hi - lo;
    Ok(GapCheckReport {
        function: function_id.to_string(),
        pass: range <= bound_window,
        range,
        bound_window,
        centered,
    })
}

// ---------------------------------------------------------------------------
// report rendering
// ---------------------------------------------------------------------------

/// Human-readable summary plus a JSON mirror of every number.
pub fn render_report(res: &SweepResult, fits: &[FitReport]) -> (String, serde_json::Value) {
    let mut text = String::new();
    let _ = writeln!(text, "potential: {}", res.meta.potential);
    let _ = writeln!(text, "mu: {}  [{}]", res.meta.mu, res.meta.classification);
    let _ = writeln!(text, "N(mu;H) = {:.12}", res.meta.n_mu);
    for (id, w, h1) in &res.meta.functions {
        let _ = writeln!(text, "  {id}: W(h) = {w:.12}, h(1) = {h1}");
    }
    let _ = writeln!(text, "rows:");
    let _ = writeln!(text, "  {:>10} {:>10} {:>22} {:>6}", "alpha", "function", "trace", "count");
    for r in &res.rows {
        let _ = writeln!(
            text,
            "  {:>10.4} {:>10} {:>22.15e} {:>6}",
            r.alpha, r.function, r.trace, r.eigencount
        );
    }
    if !fits.is_empty() {
        let _ = writeln!(text, "fits (model a*alpha + b*log(alpha) + c):");
        for f in fits {
            let _ = writeln!(
                text,
                "  {}: a = {:.6e} (target {:.6e}, dev {:.2}%), b = {:.6e} (target {:.6e}, dev {:.2}%), c = {:.6e}, rms = {:.2e}",
                f.function,
                f.a,
                f.target_a,
                100.0 * f.deviation_a,
                f.b,
                f.target_b,
                100.0 * f.deviation_b,
                f.c,
                f.residual_rms
            );
        }
    }
    let json = serde_json::json!({
        "meta": res.meta,
        "rows": res.rows,
        "fits": fits,
    });
    (text, json)
}
