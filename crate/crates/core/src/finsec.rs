//! Finite sections of the Fermi projection and their trace functionals.
//!
//! The compression of P_μ to a window (−α, α) is discretized by a Nyström
//! scheme on composite Gauss-Legendre panels. Because the kernel quadrature
//! writes P as a positive sum of rank-one terms, the section matrix is an
//! exact Gram matrix: symmetric by construction and positive semidefinite up
//! to eigensolver roundoff, which keeps the spectrum pinned to [0, 1].
//!
//! Trace functionals tr h(B) are evaluated from the section spectrum; the
//! log-term coefficient W(h) = π^{-2} ∫₀¹ [h(t) − t h(1)] / (t(1−t)) dt is
//! computed by adaptive quadrature with the substitutions t = s² and
//! t = 1 − s² that flatten the endpoint singularities.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{lw_kernel, KernelEvaluator, LwSign};
use crate::linalg::{sym_eigenvalues, RMatrix};
use crate::quad::{adaptive_gk, composite_gl};

const PI: f64 = std::f64::consts::PI;
const X_GL_POINTS: usize = 8;
/// Containment tolerance for section spectra.
pub const SPEC_TOL: f64 = 1e-6;
/// Relaxed positivity guard for the reference kernels (positive, not a
/// contraction compression).
pub const LW_SPEC_TOL: f64 = 1e-4;

/// Nyström discretization of χ_{(−α,α)} P_μ χ_{(−α,α)}.
pub struct FiniteSection {
    pub alpha: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub matrix: RMatrix,
    /// recorded deviation from Hermiticity before symmetrization; the Gram
    /// construction makes it exactly zero
    pub herm_deviation: f64,
}

fn window_rule(alpha: f64, spacing: f64) -> (Vec<f64>, Vec<f64>) {
    let panels = ((2.0 * alpha) / (X_GL_POINTS as f64 * spacing)).ceil() as usize;
    let rule = composite_gl(-alpha, alpha, panels.max(1), X_GL_POINTS);
    rule.into_iter().unzip()
}

/// Assemble the section matrix √w_i P(x_i, x_j) √w_j.
/// The grid must resolve the fastest kernel oscillation (wavenumber ≤ 2δ),
/// hence the spacing bound min(0.2, π/(4√μ)).
pub fn assemble_section(
    ev: &KernelEvaluator,
    alpha: f64,
    spacing: f64,
) -> Result<FiniteSection> {
    let bound = if ev.mu > 0.0 {
        (PI / (4.0 * ev.mu.sqrt())).min(0.2)
    } else {
        0.2
    };
    if spacing > bound {
        return Err(Error::SpacingTooCoarse { spacing, bound });
    }
    let (nodes, weights) = window_rule(alpha, spacing);
    let n = nodes.len();
    let (re, im) = ev.weighted_phi_planes(&nodes, &weights);
    let q = if n > 0 { re.len() / n } else { 0 };

    let mut matrix = RMatrix::zeros(n);
    // lower triangle of the Gram product, parallel over row blocks
    const BLOCK: usize = 16;
    matrix
        .a
        .par_chunks_mut(BLOCK * n)
        .enumerate()
        .for_each(|(bi, rows)| {
            let i0 = bi * BLOCK;
            let rows_here = rows.len() / n;
            for jb in (0..=(i0 + rows_here - 1)).step_by(BLOCK) {
                for ii in 0..rows_here {
                    let i = i0 + ii;
                    let ri = &re[i * q..(i + 1) * q];
                    let mi = &im[i * q..(i + 1) * q];
                    let j_hi = (jb + BLOCK).min(i + 1);
                    for j in jb..j_hi {
                        let rj = &re[j * q..(j + 1) * q];
                        let mj = &im[j * q..(j + 1) * q];
                        rows[ii * n + j] = dot4(ri, rj) + dot4(mi, mj);
                    }
                }
            }
        });
    // mirror to the upper triangle
    for i in 0..n {
        for j in i + 1..n {
            matrix.a[i * n + j] = matrix.a[j * n + i];
        }
    }
    Ok(FiniteSection {
        alpha,
        nodes,
        weights,
        matrix,
        herm_deviation: 0.0,
    })
}

/// Four-accumulator dot product; keeps the summation order fixed while still
/// vectorizing.
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Eigenvalues of a finite section, sorted descending, verified to sit in
/// [−spec_tol, 1 + spec_tol].
#[derive(Clone, Debug)]
pub struct SectionSpectrum {
    pub eigenvalues: Vec<f64>,
    pub spec_tol: f64,
}

pub fn section_spectrum(fs: &FiniteSection) -> Result<SectionSpectrum> {
    let spectrum = spectrum_of(&fs.matrix, SPEC_TOL, true)?;
    Ok(spectrum)
}

fn spectrum_of(matrix: &RMatrix, spec_tol: f64, check_upper: bool) -> Result<SectionSpectrum> {
    let trace = matrix.trace();
    let frob = matrix.frobenius_sq();
    let mut work = matrix.clone();
    let mut vals = sym_eigenvalues(&mut work)?;
    drop(work);
    // consistency of the reduction: eigenvalue sums must reproduce the
    // matrix invariants
    let scale = frob.sqrt().max(1.0);
    let sum: f64 = vals.iter().sum();
    let sum_sq: f64 = vals.iter().map(|v| v * v).sum();
    let n = matrix.n.max(1) as f64;
    if (sum - trace).abs() > 1e-8 * n * scale || (sum_sq - frob).abs() > 1e-7 * n * scale * scale
    {
        return Err(Error::EigenNoConvergence {
            residual: (sum - trace).abs().max((sum_sq - frob).abs()),
            iterations: 0,
        });
    }
    for &v in &vals {
        let hi_ok = !check_upper || v <= 1.0 + spec_tol;
        if v < -spec_tol || !hi_ok {
            return Err(Error::PositivityLost {
                value: v,
                lo: -spec_tol,
                hi: if check_upper {
                    format!("1+{spec_tol:.0e}")
                } else {
                    "inf".into()
                },
            });
        }
    }
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(SectionSpectrum {
        eigenvalues: vals,
        spec_tol,
    })
}

impl SectionSpectrum {
    /// Eigenvalues clamped to [0, 1]; containment was already asserted, so
    /// the clamp removes tolerance-scale noise only.
    pub fn clamped(&self) -> impl Iterator<Item = f64> + '_ {
        self.eigenvalues.iter().map(|&v| v.clamp(0.0, 1.0))
    }

    /// Number of eigenvalues above 1/2 (the phase-space count).
    pub fn count_above_half(&self) -> usize {
        self.eigenvalues.iter().filter(|&&v| v > 0.5).count()
    }
}

// ---------------------------------------------------------------------------
// test functions
// ---------------------------------------------------------------------------

/// Test functions h with h(0) = 0 applied to section spectra.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    /// p_n(t) = (t(1−t))^n
    PolyP(u32),
    /// q_n(t) = t (t(1−t))^n
    PolyQ(u32),
    /// η_γ(t) = (1−γ)^{-1} ln(t^γ + (1−t)^γ)
    Renyi(f64),
    /// η₁(t) = −t ln t − (1−t) ln(1−t)
    VonNeumann,
    /// h(t) = t
    Linear,
    /// piecewise-linear table on [0, 1]; first sample must vanish
    Table(Vec<(f64, f64)>),
}

impl TestFunction {
    /// Parse "p:n", "q:n", "renyi:γ", "vn", "linear".
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        if s == "vn" {
            return Ok(TestFunction::VonNeumann);
        }
        if s == "linear" {
            return Ok(TestFunction::Linear);
        }
        if let Some(rest) = s.strip_prefix("p:") {
            if let Ok(n) = rest.parse::<u32>() {
                if n >= 1 {
                    return Ok(TestFunction::PolyP(n));
                }
            }
        }
        if let Some(rest) = s.strip_prefix("q:") {
            if let Ok(n) = rest.parse::<u32>() {
                if n >= 1 {
                    return Ok(TestFunction::PolyQ(n));
                }
            }
        }
        if let Some(rest) = s.strip_prefix("renyi:") {
            if let Ok(g) = rest.parse::<f64>() {
                if g > 0.0 {
                    return Ok(TestFunction::Renyi(g));
                }
            }
        }
        Err(Error::UnknownFunction(spec.to_string()))
    }

    pub fn id(&self) -> String {
        match self {
            TestFunction::PolyP(n) => format!("p:{n}"),
            TestFunction::PolyQ(n) => format!("q:{n}"),
            TestFunction::Renyi(g) => format!("renyi:{g}"),
            TestFunction::VonNeumann => "vn".into(),
            TestFunction::Linear => "linear".into(),
            TestFunction::Table(_) => "table".into(),
        }
    }

    /// Validate the h(0) = 0 requirement (only tables can violate it).
    pub fn validate(&self) -> Result<()> {
        if let TestFunction::Table(pts) = self {
            if pts.is_empty() {
                return Err(Error::ConfigInvalid("empty function table".into()));
            }
            if pts[0].1.abs() > 1e-12 {
                return Err(Error::ConfigInvalid(
                    "tabulated test function must vanish at t = 0".into(),
                ));
            }
        }
        if let TestFunction::Renyi(g) = self {
            if *g <= 0.0 {
                return Err(Error::ConfigInvalid("renyi exponent must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TestFunction::PolyP(n) => (t * (1.0 - t)).powi(*n as i32),
            TestFunction::PolyQ(n) => t * (t * (1.0 - t)).powi(*n as i32),
            TestFunction::Renyi(g) => {
                if *g == 1.0 {
                    return TestFunction::VonNeumann.eval(t);
                }
                (t.powf(*g) + (1.0 - t).powf(*g)).ln() / (1.0 - g)
            }
            TestFunction::VonNeumann => {
                let xlx = |u: f64| if u <= 0.0 { 0.0 } else { u * u.ln() };
                -xlx(t) - xlx(1.0 - t)
            }
            TestFunction::Linear => t,
            TestFunction::Table(pts) => {
                if t <= pts[0].0 {
                    return pts[0].1;
                }
                for w in pts.windows(2) {
                    if t <= w[1].0 {
                        let f = (t - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + f * (w[1].1 - w[0].1);
                    }
                }
                pts.last().unwrap().1
            }
        }
    }

    /// h(1); for tables, the endpoint sample.
    pub fn at_one(&self) -> f64 {
        match self {
            TestFunction::PolyP(_) | TestFunction::PolyQ(_) => 0.0,
            TestFunction::Renyi(_) | TestFunction::VonNeumann => 0.0,
            TestFunction::Linear => 1.0,
            TestFunction::Table(pts) => pts.last().map(|p| p.1).unwrap_or(0.0),
        }
    }

    /// Hölder exponent at the endpoints; diagnostic metadata, not enforced.
    pub fn holder_exponent(&self) -> f64 {
        match self {
            TestFunction::Renyi(g) => g.min(1.0),
            _ => 1.0,
        }
    }
}

/// tr h(B): Σ h(clamp λ_i), summed in the stored (descending) order so the
/// result is deterministic.
pub fn trace_h(sp: &SectionSpectrum, h: &TestFunction) -> f64 {
    sp.clamped().map(|t| h.eval(t)).sum()
}

/// Σ (λ(1−λ))^q for q ∈ (0, 1].
pub fn schatten_q(sp: &SectionSpectrum, q: f64) -> f64 {
    assert!(q > 0.0 && q <= 1.0, "schatten exponent must be in (0, 1]");
    sp.clamped().map(|t| (t * (1.0 - t)).powf(q)).sum()
}

// ---------------------------------------------------------------------------
// Widom coefficient
// ---------------------------------------------------------------------------

/// W(h) = π^{-2} ∫₀¹ [h(t) − t h(1)] / (t(1−t)) dt by adaptive quadrature
/// with t = s² (left half) and t = 1 − s² (right half).
pub fn widom_coefficient(h: &TestFunction) -> Result<f64> {
    h.validate()?;
    let h1 = h.at_one();
    let tol = 1e-10;
    let s_max = 0.5f64.sqrt();
    // left: t = s², dt = 2s ds, integrand 2 [h(t) − t h1] / (s (1 − t))
    let left = adaptive_gk(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let t = s * s;
            2.0 * (h.eval(t) - t * h1) / (s * (1.0 - t))
        },
        0.0,
        s_max,
        tol,
    )?;
    // right: t = 1 − s², integrand 2 [h(t) − t h1] / (t s)
    let right = adaptive_gk(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let t = 1.0 - s * s;
            2.0 * (h.eval(t) - t * h1) / (t * s)
        },
        0.0,
        s_max,
        tol,
    )?;
    Ok((left + right) / (PI * PI))
}

/// (W(p_n), W(q_n)); the caller asserts the halving identity
/// W(q_n) = W(p_n)/2.
pub fn widom_halving_check(n: u32) -> Result<(f64, f64)> {
    assert!(n >= 1);
    Ok((
        widom_coefficient(&TestFunction::PolyP(n))?,
        widom_coefficient(&TestFunction::PolyQ(n))?,
    ))
}

// ---------------------------------------------------------------------------
// reference traces
// ---------------------------------------------------------------------------

/// tr (D_α^+)^n via the Nyström spectrum of the closed-form kernel.
pub fn lw_trace(alpha: f64, n: u32, spacing: f64) -> Result<f64> {
    assert!(n >= 1);
    let (nodes, weights) = window_rule(alpha, spacing);
    let m = nodes.len();
    let mut matrix = RMatrix::zeros(m);
    for i in 0..m {
        for j in 0..=i {
            let v = weights[i].sqrt()
                * lw_kernel(alpha, LwSign::Plus, nodes[i], nodes[j])
                * weights[j].sqrt();
            matrix.a[i * m + j] = v;
            matrix.a[j * m + i] = v;
        }
    }
    let sp = spectrum_of(&matrix, LW_SPEC_TOL, false)?;
    Ok(sp
        .eigenvalues
        .iter()
        .map(|&v| v.max(0.0).powi(n as i32))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bands::SpectralModel;
    use crate::fibre::PeriodicPotential;

    fn free_model() -> SpectralModel {
        SpectralModel::new(&PeriodicPotential::zero(0), 4.0, 24, 1e-9).unwrap()
    }

    fn cosine_model() -> SpectralModel {
        SpectralModel::new(&PeriodicPotential::cosine(1.0, 1).unwrap(), 3.0, 32, 1e-9).unwrap()
    }

    #[test]
    fn weights_sum_to_window_length() {
        let (_, w) = window_rule(10.0, 0.125);
        let total: f64 = w.iter().sum();
        assert!((total - 20.0).abs() < 1e-10);
    }

    #[test]
    fn spacing_bound_is_enforced() {
        let model = free_model();
        let ev = KernelEvaluator::for_window(&model, 1.0, 10.0, 1e-6).unwrap();
        match assemble_section(&ev, 10.0, 1.0) {
            Err(Error::SpacingTooCoarse { bound, .. }) => {
                assert!((bound - 0.2).abs() < 1e-12)
            }
            other => panic!("expected spacing error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn free_section_entries_are_the_sine_kernel() {
        let model = free_model();
        let ev = KernelEvaluator::for_window(&model, 1.0, 10.0, 1e-6).unwrap();
        let fs = assemble_section(&ev, 10.0, 0.125).unwrap();
        assert_eq!(fs.herm_deviation, 0.0);
        let n = fs.nodes.len();
        for &(i, j) in &[(0usize, 5usize), (3, 40), (n - 1, n / 2)] {
            let d = fs.nodes[i] - fs.nodes[j];
            let sk = if d.abs() < 1e-12 {
                1.0 / PI
            } else {
                d.sin() / (PI * d)
            };
            let expected = fs.weights[i].sqrt() * sk * fs.weights[j].sqrt();
            assert!(
                (fs.matrix.at(i, j) - expected).abs() < 1e-9,
                "entry ({i},{j})"
            );
        }
    }

    #[test]
    fn spectrum_below_fermi_sea_is_empty() {
        let model = cosine_model();
        let ev = KernelEvaluator::for_window(&model, -3.0, 10.0, 1e-6).unwrap();
        let fs = assemble_section(&ev, 10.0, 0.125).unwrap();
        let sp = section_spectrum(&fs).unwrap();
        assert!(sp.eigenvalues.iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn free_eigencount_matches_phase_space() {
        // 2α√μ/π ≈ 12.7 at α = 20, μ = 1
        let model = free_model();
        let ev = KernelEvaluator::for_window(&model, 1.0, 20.0, 1e-6).unwrap();
        let fs = assemble_section(&ev, 20.0, 0.125).unwrap();
        let sp = section_spectrum(&fs).unwrap();
        let count = sp.count_above_half();
        assert!(count == 12 || count == 13, "count {count}");
        // containment
        for &v in &sp.eigenvalues {
            assert!((-SPEC_TOL..=1.0 + SPEC_TOL).contains(&v));
        }
    }

    #[test]
    fn spectrum_is_deterministic() {
        let model = free_model();
        let ev = KernelEvaluator::for_window(&model, 1.0, 10.0, 1e-6).unwrap();
        let fs = assemble_section(&ev, 10.0, 0.125).unwrap();
        let a = section_spectrum(&fs).unwrap();
        let b = section_spectrum(&fs).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
    }

    #[test]
    fn linear_trace_approximates_leading_term() {
        // tr B = 2αN(μ,H) exactly at multiples of 2π; N = 1/π for μ = 1
        let model = free_model();
        let alpha = 4.0 * PI;
        let ev = KernelEvaluator::for_window(&model, 1.0, alpha, 1e-6).unwrap();
        let fs = assemble_section(&ev, alpha, 0.125).unwrap();
        let sp = section_spectrum(&fs).unwrap();
        let tr = trace_h(&sp, &TestFunction::Linear);
        assert!((tr - 8.0).abs() <= 0.16, "tr B = {tr} vs 8");
    }

    #[test]
    fn refinement_stability_of_p1_trace() {
        // self-convergence: halving the spacing barely moves tr p₁(B)
        let model = cosine_model();
        let g1 = &model.bs.genuine[1];
        let mu = 0.5 * (g1.lower + g1.upper);
        let ev = KernelEvaluator::for_window(&model, mu, 20.0, 1e-6).unwrap();
        let coarse = section_spectrum(&assemble_section(&ev, 20.0, 0.125).unwrap()).unwrap();
        let fine = section_spectrum(&assemble_section(&ev, 20.0, 0.0625).unwrap()).unwrap();
        let a = trace_h(&coarse, &TestFunction::PolyP(1));
        let b = trace_h(&fine, &TestFunction::PolyP(1));
        assert!((a - b).abs() <= 1e-4, "refinement moved trace by {}", a - b);
    }

    #[test]
    fn zero_table_gives_zero_trace() {
        let model = free_model();
        let ev = KernelEvaluator::for_window(&model, 1.0, 10.0, 1e-6).unwrap();
        let fs = assemble_section(&ev, 10.0, 0.125).unwrap();
        let sp = section_spectrum(&fs).unwrap();
        let zero = TestFunction::Table(vec![(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(trace_h(&sp, &zero), 0.0);
    }

    #[test]
    fn p1_trace_is_the_pair_product_sum() {
        let model = free_model();
        let ev = KernelEvaluator::for_window(&model, 1.0, 15.0, 1e-6).unwrap();
        let fs = assemble_section(&ev, 15.0, 0.125).unwrap();
        let sp = section_spectrum(&fs).unwrap();
        let via_h = trace_h(&sp, &TestFunction::PolyP(1));
        let direct: f64 = sp.clamped().map(|t| t * (1.0 - t)).sum();
        assert_eq!(via_h, direct);
        let via_schatten = schatten_q(&sp, 1.0);
        assert!((via_h - via_schatten).abs() < 1e-14);
    }

    #[test]
    fn trace_is_linear_in_h() {
        let model = free_model();
        let ev = KernelEvaluator::for_window(&model, 1.0, 12.0, 1e-6).unwrap();
        let fs = assemble_section(&ev, 12.0, 0.125).unwrap();
        let sp = section_spectrum(&fs).unwrap();
        let p1 = trace_h(&sp, &TestFunction::PolyP(1));
        let p2 = trace_h(&sp, &TestFunction::PolyP(2));
        // 3 p₁ − 2 p₂ as an explicit table-free combination
        let combo: f64 = sp
            .clamped()
            .map(|t| {
                3.0 * TestFunction::PolyP(1).eval(t) - 2.0 * TestFunction::PolyP(2).eval(t)
            })
            .sum();
        assert!((combo - (3.0 * p1 - 2.0 * p2)).abs() < 1e-12);
    }

    #[test]
    fn symmetric_functions_see_only_the_pair_products() {
        let model = free_model();
        let ev = KernelEvaluator::for_window(&model, 1.0, 12.0, 1e-6).unwrap();
        let fs = assemble_section(&ev, 12.0, 0.125).unwrap();
        let sp = section_spectrum(&fs).unwrap();
        for n in [1u32, 2, 3] {
            let via_h = trace_h(&sp, &TestFunction::PolyP(n));
            let via_products: f64 = sp.clamped().map(|t| (t * (1.0 - t)).powi(n as i32)).sum();
            assert!((via_h - via_products).abs() < 1e-13);
        }
    }

    #[test]
    fn widom_polynomial_values_are_exact() {
        let w1 = widom_coefficient(&TestFunction::PolyP(1)).unwrap();
        assert!((w1 - 1.0 / (PI * PI)).abs() < 1e-9, "W(p1) = {w1}");
        let w2 = widom_coefficient(&TestFunction::PolyP(2)).unwrap();
        assert!((w2 - 1.0 / (6.0 * PI * PI)).abs() < 1e-9, "W(p2) = {w2}");
    }

    #[test]
    fn widom_halving_identity() {
        for n in 1..=4 {
            let (wp, wq) = widom_halving_check(n).unwrap();
            assert!(
                (wq - 0.5 * wp).abs() < 1e-9,
                "n = {n}: W(q) = {wq}, W(p)/2 = {}",
                0.5 * wp
            );
        }
    }

    #[test]
    fn widom_von_neumann_is_one_third() {
        let w = widom_coefficient(&TestFunction::VonNeumann).unwrap();
        assert!((w - 1.0 / 3.0).abs() < 1e-8, "W(η₁) = {w}");
        // independent midpoint-rule oracle on the substituted halves
        let h = TestFunction::VonNeumann;
        let m = 200_000;
        let s_max = 0.5f64.sqrt();
        let hstep = s_max / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            let s = (i as f64 + 0.5) * hstep;
            let t = s * s;
            acc += 2.0 * h.eval(t) / (s * (1.0 - t)) * hstep;
            let t2 = 1.0 - s * s;
            acc += 2.0 * h.eval(t2) / (t2 * s) * hstep;
        }
        let oracle = acc / (PI * PI);
        assert!((w - oracle).abs() < 1e-6, "quadrature {w} vs oracle {oracle}");
    }

    #[test]
    fn widom_renyi_matches_closed_form() {
        // W(η_γ) = (1 + 1/γ)/6 for the Rényi family
        for &(g, expect) in &[(2.0, 0.25), (3.0, (1.0 + 1.0 / 3.0) / 6.0), (0.5, 0.5)] {
            let w = widom_coefficient(&TestFunction::Renyi(g)).unwrap();
            assert!((w - expect).abs() < 1e-8, "W(renyi {g}) = {w} vs {expect}");
        }
    }

    #[test]
    fn widom_is_linear() {
        let w1 = widom_coefficient(&TestFunction::PolyP(1)).unwrap();
        let w2 = widom_coefficient(&TestFunction::PolyP(2)).unwrap();
        // table for 2 p₁ + 3 p₂; the assertion allows for the piecewise
        // interpolation error of the table itself
        let pts: Vec<(f64, f64)> = (0..=500)
            .map(|i| {
                let t = i as f64 / 500.0;
                (
                    t,
                    2.0 * TestFunction::PolyP(1).eval(t) + 3.0 * TestFunction::PolyP(2).eval(t),
                )
            })
            .collect();
        let w = widom_coefficient(&TestFunction::Table(pts)).unwrap();
        assert!((w - (2.0 * w1 + 3.0 * w2)).abs() < 2e-4, "{w}");
    }

    #[test]
    fn function_parsing_round_trips() {
        for s in ["p:1", "q:3", "renyi:2", "vn", "linear"] {
            let f = TestFunction::parse(s).unwrap();
            assert_eq!(f.id(), s);
        }
        assert!(TestFunction::parse("bogus").is_err());
        assert!(TestFunction::parse("p:0").is_err());
        assert!(TestFunction::parse("renyi:-1").is_err());
    }

    #[test]
    fn lw_trace_closed_form_for_n1() {
        let alpha = 100.0;
        let tr = lw_trace(alpha, 1, 0.25).unwrap();
        let exact = (2.0 * alpha + 1.0).ln() / (4.0 * PI * PI);
        assert!((tr - exact).abs() < 1e-6, "tr D = {tr} vs {exact}");
    }

    #[test]
    fn lw_trace_n2_is_positive_and_below_n1() {
        let t1 = lw_trace(50.0, 1, 0.25).unwrap();
        let t2 = lw_trace(50.0, 2, 0.25).unwrap();
        assert!(t2 > 0.0 && t2 < t1);
    }
}
