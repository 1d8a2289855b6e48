//! Fermi projection kernels.
//!
//! The spectral projection below a Fermi energy μ has the kernel
//! P_μ(x, y) = Σ_bands ∫_{Λ(k) < μ} Φ(x, k) conj(Φ(y, k)) dk. Filled bands
//! contribute over their whole half-circle, the band containing μ up to the
//! unfolded momentum δ with Λ(δ) = μ. The conjugation symmetry about the
//! band base point folds every integral onto [k_start, ·], which makes the
//! quadrature sum manifestly real and Hermitian.
//!
//! Alongside P_μ the module evaluates the leading kernel
//! Π_μ(x, y) = 2 Im[Φ(x, δ) conj(Φ(y, δ))] / (x − y), decay probes for the
//! interior / gap dichotomy, almost-periodic means, and the closed-form
//! reference kernels D_α^±.

use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

use crate::bands::{Classification, GenuineBand, PhiNode, SpectralModel};
use crate::error::{Error, Result};
use crate::fibre::{eval_bloch, BlochPart};
use crate::quad::composite_gl;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Composite-rule panel count per band segment, sized so each panel sees at
/// most ~π/2 of phase of e^{ik(x-y)} for |x - y| up to 2·alpha_max.
pub fn panels_for_window(alpha_max: f64) -> usize {
    32usize.max((4.0 * alpha_max / std::f64::consts::PI).ceil() as usize)
}

const GL_POINTS_PER_PANEL: usize = 4;

/// Per-band provenance of the quadrature nodes.
#[derive(Clone, Debug)]
pub enum Contribution {
    /// whole genuine band below μ
    Full { genuine_index: usize },
    /// band containing μ, integrated up to δ
    Partial { genuine_index: usize, delta: f64 },
}

struct KNode {
    weight: f64,
    fold_k: f64,
    coeffs: Arc<Vec<Complex64>>,
}

/// Quadrature-backed evaluator of P_μ(x, y).
pub struct KernelEvaluator {
    pub mu: f64,
    pub contributions: Vec<Contribution>,
    nodes: Vec<KNode>,
    /// eigendata at δ for the partial band, if μ is interior
    partial: Option<(usize, f64, PhiNode)>,
    pub nodes_per_segment: usize,
}

impl KernelEvaluator {
    /// Build an evaluator whose k-quadrature resolves the kernel oscillation
    /// for |x - y| <= 2·alpha_max.
    pub fn for_window(
        model: &SpectralModel,
        mu: f64,
        alpha_max: f64,
        edge_tol: f64,
    ) -> Result<Self> {
        Self::with_nodes(
            model,
            mu,
            GL_POINTS_PER_PANEL * panels_for_window(alpha_max),
            edge_tol,
        )
    }

    /// Build an evaluator with an explicit per-segment node count.
    pub fn with_nodes(
        model: &SpectralModel,
        mu: f64,
        nodes_per_segment: usize,
        edge_tol: f64,
    ) -> Result<Self> {
        let classification = model.classify(mu, edge_tol)?;
        if classification == Classification::Edge {
            // the partial-band quadrature is undefined within edge_tol of an
            // edge; use `edge_evaluator` (full bands only) there
            return Err(Error::EdgeMu { mu });
        }
        let panels = nodes_per_segment.div_ceil(GL_POINTS_PER_PANEL).max(1);

        let mut contributions = Vec::new();
        let mut segments: Vec<(f64, f64, &GenuineBand)> = Vec::new();
        let mut partial: Option<(usize, f64, PhiNode)> = None;

        for (idx, gb) in model.genuine.iter().enumerate() {
            let info = &gb.info;
            if mu <= info.lower {
                continue;
            }
            let full = !info.unbounded_or_truncated && mu >= info.upper;
            let interior_here = matches!(
                classification,
                Classification::Interior { genuine_index } if genuine_index == idx
            );
            if full {
                contributions.push(Contribution::Full { genuine_index: idx });
                for l in 0..info.multiplicity {
                    let a = info.k_start + l as f64 / 2.0;
                    segments.push((a, a + 0.5, gb));
                }
            } else if interior_here {
                let delta = gb.solve_delta(mu)?;
                contributions.push(Contribution::Partial {
                    genuine_index: idx,
                    delta,
                });
                let mut l = 0;
                loop {
                    let a = info.k_start + l as f64 / 2.0;
                    if a >= delta {
                        break;
                    }
                    segments.push((a, (a + 0.5).min(delta), gb));
                    l += 1;
                }
                partial = Some((idx, delta, gb.branch_node_raw(delta)?));
            }
        }

        // lay composite Gauss-Legendre nodes over every segment and solve the
        // fibre branch at each node (rows are independent; solve in parallel)
        let mut slots: Vec<(f64, f64, &GenuineBand)> = Vec::new();
        for (a, b, gb) in &segments {
            for (k, w) in composite_gl(*a, *b, panels, GL_POINTS_PER_PANEL) {
                slots.push((k, w, gb));
            }
        }
        let nodes: Vec<KNode> = slots
            .par_iter()
            .map(|(kappa, w, gb)| {
                let node = gb.branch_node_raw(*kappa)?;
                Ok(KNode {
                    weight: *w,
                    fold_k: node.fold_k,
                    coeffs: node.coeffs,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(KernelEvaluator {
            mu,
            contributions,
            nodes,
            partial,
            nodes_per_segment: panels * GL_POINTS_PER_PANEL,
        })
    }

    /// Evaluator for μ at (or within edge_tol of) a band edge: only fully
    /// filled bands contribute, so the partial-band quadrature never runs.
    pub fn edge_evaluator(
        model: &SpectralModel,
        mu: f64,
        alpha_max: f64,
        edge_tol: f64,
    ) -> Result<Self> {
        let panels = panels_for_window(alpha_max);
        let mut contributions = Vec::new();
        let mut slots: Vec<(f64, f64, &GenuineBand)> = Vec::new();
        for (idx, gb) in model.genuine.iter().enumerate() {
            let info = &gb.info;
            let full = !info.unbounded_or_truncated && info.upper <= mu + edge_tol;
            if !full {
                continue;
            }
            contributions.push(Contribution::Full { genuine_index: idx });
            for l in 0..info.multiplicity {
                let a = info.k_start + l as f64 / 2.0;
                for (k, w) in composite_gl(a, a + 0.5, panels, GL_POINTS_PER_PANEL) {
                    slots.push((k, w, gb));
                }
            }
        }
        let nodes: Vec<KNode> = slots
            .par_iter()
            .map(|(kappa, w, gb)| {
                let node = gb.branch_node_raw(*kappa)?;
                Ok(KNode {
                    weight: *w,
                    fold_k: node.fold_k,
                    coeffs: node.coeffs,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KernelEvaluator {
            mu,
            contributions,
            nodes,
            partial: None,
            nodes_per_segment: panels * GL_POINTS_PER_PANEL,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn delta(&self) -> Option<f64> {
        self.partial.as_ref().map(|(_, d, _)| *d)
    }

    /// √w_q · Φ_q(x) for every quadrature node; the building block for both
    /// pointwise kernel values and Nyström assembly.
    pub fn weighted_phi_at(&self, x: f64) -> Vec<Complex64> {
        self.nodes
            .iter()
            .map(|node| {
                eval_bloch(&node.coeffs, node.fold_k, x, BlochPart::Phi) * node.weight.sqrt()
            })
            .collect()
    }

    /// P(x, y) from two precomputed value rows: 2 Re Σ_q a_q conj(b_q).
    pub fn kernel_from_values(a: &[Complex64], b: &[Complex64]) -> f64 {
        2.0 * a
            .iter()
            .zip(b)
            .map(|(p, q)| p.re * q.re + p.im * q.im)
            .sum::<f64>()
    }

    /// Row planes for Nyström assembly: real and imaginary parts of
    /// √2 · √(w_i ω_q) · Φ_q(x_i), row-major (len = xs.len() × node_count).
    /// The Gram product of the planes then gives the section matrix directly.
    pub(crate) fn weighted_phi_planes(&self, xs: &[f64], ws: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let q = self.nodes.len();
        let n = xs.len();
        let mut re = vec![0.0f64; n * q];
        let mut im = vec![0.0f64; n * q];
        re.par_chunks_mut(q.max(1))
            .zip(im.par_chunks_mut(q.max(1)))
            .enumerate()
            .for_each(|(i, (rrow, irow))| {
                if q == 0 {
                    return;
                }
                let x = xs[i];
                let scale = (2.0 * ws[i]).sqrt();
                // shared e^{inx} power table across the k-nodes of this row
                let dim = self.nodes[0].coeffs.len();
                let n_max = ((dim - 1) / 2) as i64;
                let z = Complex64::new(0.0, x).exp();
                let mut pow = vec![Complex64::new(0.0, 0.0); dim];
                pow[n_max as usize] = Complex64::new(1.0, 0.0);
                for s in 1..=n_max {
                    pow[(n_max + s) as usize] = pow[(n_max + s - 1) as usize] * z;
                    pow[(n_max - s) as usize] = pow[(n_max - s + 1) as usize] * z.conj();
                }
                for (qi, node) in self.nodes.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (c, p) in node.coeffs.iter().zip(&pow) {
                        acc += c * p;
                    }
                    let carrier = Complex64::new(0.0, node.fold_k * x).exp();
                    let v = acc * carrier * (scale * node.weight.sqrt() / TWO_PI.sqrt());
                    rrow[qi] = v.re;
                    irow[qi] = v.im;
                }
            });
        (re, im)
    }

    /// Fermi projection kernel P_μ(x, y). Real for real potentials; Hermitian
    /// symmetry holds exactly by construction of the quadrature sum.
    pub fn kernel_p(&self, x: f64, y: f64) -> Complex64 {
        let a = self.weighted_phi_at(x);
        let b = self.weighted_phi_at(y);
        Complex64::new(Self::kernel_from_values(&a, &b), 0.0)
    }

    /// Leading kernel Π_μ(x, y); the removable singularity on the diagonal is
    /// filled with the analytic limit through the Fourier-series derivative.
    pub fn kernel_pi(&self, x: f64, y: f64) -> Result<Complex64> {
        let (_, _, node) = self.partial.as_ref().ok_or(Error::EdgeMu { mu: self.mu })?;
        Ok(Complex64::new(pi_from_node(node, x, y), 0.0))
    }

    /// Remainder R_μ = P_μ − Π_μ.
    pub fn kernel_r(&self, x: f64, y: f64) -> Result<Complex64> {
        Ok(self.kernel_p(x, y) - self.kernel_pi(x, y)?)
    }
}

fn pi_from_node(node: &PhiNode, x: f64, y: f64) -> f64 {
    let px = eval_bloch(&node.coeffs, node.fold_k, x, BlochPart::Phi);
    if (x - y).abs() < 1e-8 {
        let dpy = eval_bloch(&node.coeffs, node.fold_k, y, BlochPart::PhiDx);
        let py = eval_bloch(&node.coeffs, node.fold_k, y, BlochPart::Phi);
        2.0 * (py.conj() * dpy).im
    } else {
        let py = eval_bloch(&node.coeffs, node.fold_k, y, BlochPart::Phi);
        2.0 * (px * py.conj()).im / (x - y)
    }
}

// ---------------------------------------------------------------------------
// decay probe
// ---------------------------------------------------------------------------

/// Which decay law is being probed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayMode {
    Interior,
    GapOrEdge,
}

/// Envelope amplitudes vs separation and the fitted log-log exponent.
#[derive(Clone, Debug)]
pub struct DecayReport {
    pub separations: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub fitted_exponent: f64,
}

const DECAY_BINS: usize = 24;
const CELL_SAMPLES: usize = 48;

fn probe_envelope(
    kernel: impl Fn(f64, f64) -> f64 + Sync,
    x0: f64,
    max_sep: f64,
) -> Result<DecayReport> {
    if max_sep < 20.0 {
        return Err(Error::FitUnderdetermined(max_sep));
    }
    let lo: f64 = 10.0;
    let ratio = (max_sep / lo).powf(1.0 / (DECAY_BINS as f64 - 1.0));
    let separations: Vec<f64> = (0..DECAY_BINS).map(|i| lo * ratio.powi(i as i32)).collect();
    let amplitudes: Vec<f64> = separations
        .par_iter()
        .map(|&sep| {
            let mut worst = 0.0f64;
            for i in 0..CELL_SAMPLES {
                let y = x0 + sep + TWO_PI * i as f64 / CELL_SAMPLES as f64;
                worst = worst.max(kernel(x0, y).abs());
            }
            worst
        })
        .collect();
    // least-squares slope of ln(amplitude) against ln(separation)
    let pts: Vec<(f64, f64)> = separations
        .iter()
        .zip(&amplitudes)
        .filter(|(_, &a)| a > 0.0)
        .map(|(&s, &a)| (s.ln(), a.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::FitUnderdetermined(max_sep));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(DecayReport {
        separations,
        amplitudes,
        fitted_exponent: slope,
    })
}

/// Envelope decay of P_μ: amplitude maxima over a unit cell of y at
/// log-spaced separations, fitted in log-log.
pub fn decay_probe(
    ev: &KernelEvaluator,
    _mode: DecayMode,
    x0: f64,
    max_sep: f64,
) -> Result<DecayReport> {
    let vx = ev.weighted_phi_at(x0);
    probe_envelope(
        |_, y| {
            let vy = ev.weighted_phi_at(y);
            KernelEvaluator::kernel_from_values(&vx, &vy)
        },
        x0,
        max_sep,
    )
}

/// Envelope decay of the remainder R_μ = P_μ − Π_μ (interior μ only).
pub fn decay_probe_remainder(
    ev: &KernelEvaluator,
    x0: f64,
    max_sep: f64,
) -> Result<DecayReport> {
    let (_, _, node) = ev.partial.as_ref().ok_or(Error::EdgeMu { mu: ev.mu })?;
    let vx = ev.weighted_phi_at(x0);
    probe_envelope(
        |x, y| {
            let vy = ev.weighted_phi_at(y);
            KernelEvaluator::kernel_from_values(&vx, &vy) - pi_from_node(node, x, y)
        },
        x0,
        max_sep,
    )
}

// ---------------------------------------------------------------------------
// almost-periodic mean
// ---------------------------------------------------------------------------

/// Trapezoid estimate of the almost-periodic mean (2T)^{-1} ∫_{-T}^{T} f.
pub fn ap_mean(
    f: impl Fn(f64) -> Complex64,
    t_half: f64,
    grid: f64,
) -> Result<Complex64> {
    if t_half < 100.0 {
        return Err(Error::MeanWindowTooShort(t_half));
    }
    let m = ((2.0 * t_half / grid).ceil() as usize).max(2);
    let h = 2.0 * t_half / m as f64;
    let mut acc = 0.5 * (f(-t_half) + f(t_half));
    for i in 1..m {
        acc += f(-t_half + i as f64 * h);
    }
    Ok(acc * h / (2.0 * t_half))
}

// ---------------------------------------------------------------------------
// reference kernels
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LwSign {
    Plus,
    Minus,
}

/// Closed-form reference kernel: the antiderivative of
/// (4π²)^{-1} ∫_{α+1}^∞ dz / ((z−x)(z−y)) on (−α, α)², i.e.
/// D_α^+(x, y) = ln((α+1−y)/(α+1−x)) / (4π²(x−y)) with the diagonal limit
/// 1/(4π²(α+1−x)); the minus sign is the reflection x ↦ −x. Zero outside
/// the window (the kernel carries the indicator), and positive inside it.
pub fn lw_kernel(alpha: f64, sign: LwSign, x: f64, y: f64) -> f64 {
    let (x, y) = match sign {
        LwSign::Plus => (x, y),
        LwSign::Minus => (-x, -y),
    };
    if x.abs() >= alpha || y.abs() >= alpha {
        return 0.0;
    }
    let denom = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
    let a1x = alpha + 1.0 - x;
    if x == y {
        return 1.0 / (denom * a1x);
    }
    // ln((α+1−y)/(α+1−x)) = ln1p((x−y)/(α+1−x)), stable for small |x−y|
    ((x - y) / a1x).ln_1p() / (denom * (x - y))
}
