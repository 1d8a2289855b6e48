//! Band structure over the quasi-momentum circle.
//!
//! The eigenvalue branches λ_j(k) are monotone on (0, 1/2) with edges at
//! k = 0 and k = 1/2, so each band σ_j = [μ_j, ν_j] is pinned by two fibre
//! solves. Touching bands merge into "genuine" bands S; on a genuine band
//! the branch function Λ(k) unfolds the touching branches into a single
//! strictly increasing function of the extended quasi-momentum, and the
//! eigenfunctions unfold into Φ(x, k), gauge-fixed to be continuous in k,
//! conjugation-symmetric about the band's base point, and real (up to a
//! global phase) at the band edges.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fibre::{
    assemble_fibre_matrix, bloch_inner_product, bloch_square_integral, eval_bloch, solve_fibre_branch,
    solve_fibre_values, BlochPart, PeriodicPotential,
};
use crate::linalg;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Default gauge-grid resolution per half-band.
pub const DEFAULT_GAUGE_NODES: usize = 512;
/// Default tolerance below which adjacent bands count as touching.
pub const DEFAULT_TOUCH_TOL: f64 = 1e-9;
/// Default decisiveness margin for edge classification.
pub const DEFAULT_EDGE_TOL: f64 = 1e-6;

/// Fold an extended quasi-momentum into the fundamental domain [-1/2, 1/2).
pub fn fold_quasimomentum(kappa: f64) -> f64 {
    let mut f = kappa - kappa.round();
    if f >= 0.5 {
        f -= 1.0;
    } else if f < -0.5 {
        f += 1.0;
    }
    f
}

/// A single spectral band σ_j = [μ_j, ν_j]; the lower edge sits at
/// k_j = 0 (odd j) or k_j = 1/2 (even j).
#[derive(Clone, Debug)]
pub struct Band {
    pub j: usize,
    pub k_edge: f64,
    pub lower: f64,
    pub upper: f64,
}

/// A maximal group of touching bands.
#[derive(Clone, Debug)]
pub struct GenuineBandInfo {
    /// first band index in the group (1-based)
    pub start: usize,
    /// number of bands in the group that fit below the cutoff
    pub multiplicity: usize,
    pub lower: f64,
    /// upper edge of the last listed band; only a provisional edge when
    /// `unbounded_or_truncated` is set
    pub upper: f64,
    /// set when the grouping ran into the energy cutoff, so the band may
    /// continue (or be genuinely unbounded, as in the free case)
    pub unbounded_or_truncated: bool,
    pub k_start: f64,
}

/// Bands up to an energy cutoff plus their grouping into genuine bands.
#[derive(Clone, Debug)]
pub struct BandStructure {
    pub potential: PeriodicPotential,
    pub cutoff: usize,
    pub e_max: f64,
    pub touch_tol: f64,
    pub bands: Vec<Band>,
    pub genuine: Vec<GenuineBandInfo>,
}

fn k_edge_for(j: usize) -> f64 {
    if j % 2 == 1 {
        0.0
    } else {
        0.5
    }
}

/// Compute all bands with ν_j <= E_max plus the first band crossing E_max.
/// Edges come from fibre solves at k = 0 and k = 1/2 only; a disagreement
/// between cutoffs N and 2N above 1e-6 on any listed edge is an error.
pub fn compute_bands(
    potential: &PeriodicPotential,
    e_max: f64,
    cutoff: usize,
) -> Result<BandStructure> {
    let solve_at = |n: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let at0 = solve_fibre_values(&assemble_fibre_matrix(potential, 0.0, n)?)?;
        let at_half = solve_fibre_values(&assemble_fibre_matrix(potential, -0.5, n)?)?;
        Ok((at0, at_half))
    };
    let (l0, lh) = solve_at(cutoff)?;
    let (l0_fine, lh_fine) = solve_at(2 * cutoff)?;

    if e_max <= l0[0] {
        return Err(Error::EmaxBelowSpectrum {
            e_max,
            bottom: l0[0],
        });
    }

    let edge = |j: usize| -> (f64, f64) {
        // 1-based band index; odd bands rise from k = 0, even bands from k = 1/2
        if j % 2 == 1 {
            (l0[j - 1], lh[j - 1])
        } else {
            (lh[j - 1], l0[j - 1])
        }
    };
    let edge_fine = |j: usize| -> (f64, f64) {
        if j % 2 == 1 {
            (l0_fine[j - 1], lh_fine[j - 1])
        } else {
            (lh_fine[j - 1], l0_fine[j - 1])
        }
    };

    let mut bands = Vec::new();
    let max_bands = l0.len();
    for j in 1..=max_bands {
        let (lo, hi) = edge(j);
        let (lo_f, hi_f) = edge_fine(j);
        let disagreement = (lo - lo_f).abs().max((hi - hi_f).abs());
        if disagreement > 1e-6 {
            return Err(Error::CutoffInsufficient {
                n: cutoff,
                e_max,
                j,
                disagreement,
            });
        }
        bands.push(Band {
            j,
            k_edge: k_edge_for(j),
            lower: lo,
            upper: hi,
        });
        if hi > e_max {
            break;
        }
    }
    Ok(BandStructure {
        potential: potential.clone(),
        cutoff,
        e_max,
        touch_tol: DEFAULT_TOUCH_TOL,
        bands,
        genuine: Vec::new(),
    })
}

/// Merge consecutive bands whose gap is within `touch_tol`.
pub fn group_genuine(mut bs: BandStructure, touch_tol: f64) -> BandStructure {
    bs.touch_tol = touch_tol;
    bs.genuine.clear();
    let mut iter = bs.bands.iter().peekable();
    while let Some(first) = iter.next() {
        let mut info = GenuineBandInfo {
            start: first.j,
            multiplicity: 1,
            lower: first.lower,
            upper: first.upper,
            unbounded_or_truncated: false,
            k_start: first.k_edge,
        };
        while let Some(next) = iter.peek() {
            if next.lower - info.upper <= touch_tol {
                info.upper = next.upper;
                info.multiplicity += 1;
                iter.next();
            } else {
                break;
            }
        }
        bs.genuine.push(info);
    }
    // the grouping reached the cutoff iff the last listed band crosses it
    if let (Some(last_band), Some(last_group)) = (bs.bands.last(), bs.genuine.last_mut()) {
        if last_band.upper >= bs.e_max {
            last_group.unbounded_or_truncated = true;
        }
    }
    bs
}

/// Where a Fermi energy sits relative to the genuine bands.
#[derive(Clone, Debug, PartialEq)]
pub enum Classification {
    /// interior to the genuine band with this index in `BandStructure::genuine`
    Interior { genuine_index: usize },
    Gap,
    Edge,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Interior { .. } => "interior",
            Classification::Gap => "gap",
            Classification::Edge => "edge",
        }
    }
}

/// Classify μ as Interior / Gap / Edge with a decisiveness margin.
pub fn classify_mu(bs: &BandStructure, mu: f64, edge_tol: f64) -> Result<Classification> {
    if mu > bs.e_max {
        return Err(Error::MuAboveCutoff { mu, e_max: bs.e_max });
    }
    for (idx, g) in bs.genuine.iter().enumerate() {
        let near_lower = (mu - g.lower).abs() <= edge_tol;
        let near_upper = !g.unbounded_or_truncated && (mu - g.upper).abs() <= edge_tol;
        if near_lower || near_upper {
            return Ok(Classification::Edge);
        }
        let inside_upper = if g.unbounded_or_truncated {
            true
        } else {
            mu < g.upper - edge_tol
        };
        if mu > g.lower + edge_tol && inside_upper {
            return Ok(Classification::Interior { genuine_index: idx });
        }
    }
    Ok(Classification::Gap)
}

// ---------------------------------------------------------------------------
// gauge-fixed samplers
// ---------------------------------------------------------------------------

/// Eigendata at one extended quasi-momentum.
pub struct PhiNode {
    pub kappa: f64,
    pub fold_k: f64,
    pub branch: usize,
    pub lambda: f64,
    pub coeffs: Arc<Vec<Complex64>>,
    /// set when this node is the conjugate reflection of a solved node
    pub conjugated: bool,
}

struct GaugeGrid {
    nodes: Vec<GridNode>,
}

struct GridNode {
    kappa: f64,
    fold_k: f64,
    coeffs: Arc<Vec<Complex64>>,
}

struct BandCore {
    potential: PeriodicPotential,
    cutoff: usize,
    start: usize,
    k_start: f64,
    multiplicity: usize,
    unbounded: bool,
    lambda_memo: Mutex<HashMap<u64, f64>>,
    phi_memo: Mutex<HashMap<u64, Arc<PhiNode>>>,
    gauge: Mutex<Option<Arc<GaugeGrid>>>,
    gauge_nodes_per_half_band: usize,
}

/// A genuine band together with its Λ and gauge-fixed Φ samplers.
/// Immutable after construction; the memo tables keep first-computed values
/// so concurrent reads stay deterministic.
pub struct GenuineBand {
    pub info: GenuineBandInfo,
    core: Arc<BandCore>,
}

impl GenuineBand {
    fn branch_of(&self, kappa: f64) -> usize {
        let rel = kappa - self.core.k_start;
        let mut l = (2.0 * rel).floor() as i64;
        if l < 0 {
            l = 0;
        }
        let max_l = if self.core.unbounded {
            i64::MAX
        } else {
            self.core.multiplicity as i64 - 1
        };
        self.core.start + l.min(max_l) as usize - 1 + 1
    }

    fn domain_end(&self) -> f64 {
        self.core.k_start + self.core.multiplicity as f64 / 2.0
    }

    fn check_domain(&self, kappa: f64) -> Result<f64> {
        // reflect the lower half onto the upper half
        let k = if kappa < self.core.k_start {
            2.0 * self.core.k_start - kappa
        } else {
            kappa
        };
        if !self.core.unbounded && k > self.domain_end() + 1e-12 {
            return Err(Error::MuNotInterior {
                mu: kappa,
                lo: self.core.k_start,
                hi: self.domain_end(),
            });
        }
        Ok(k)
    }

    /// Λ(k): the unfolded eigenvalue branch. Symmetric about k_start.
    pub fn lambda(&self, kappa: f64) -> Result<f64> {
        let k = self.check_domain(kappa)?;
        let key = k.to_bits();
        if let Some(v) = self.core.lambda_memo.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let branch = self.branch_of(k);
        let fold = fold_quasimomentum(k);
        let fm = assemble_fibre_matrix(&self.core.potential, fold, self.core.cutoff)?;
        if branch > fm.matrix.n {
            return Err(Error::BandIndexOutOfRange {
                j: branch,
                max: fm.matrix.n,
            });
        }
        let lam = linalg::hermitian_eigenvalue_at(&fm.matrix, branch - 1)?;
        self.core
            .lambda_memo
            .lock()
            .unwrap()
            .entry(key)
            .or_insert(lam);
        Ok(lam)
    }

    /// Unique δ in the open band interval with Λ(δ) = μ, by bisection on the
    /// monotone branch. For cutoff-truncated bands the bracket expands
    /// geometrically first.
    pub fn solve_delta(&self, mu: f64) -> Result<f64> {
        let interior = mu > self.info.lower
            && (self.core.unbounded || mu < self.info.upper);
        if !interior {
            return Err(Error::MuNotInterior {
                mu,
                lo: self.info.lower,
                hi: if self.core.unbounded {
                    f64::INFINITY
                } else {
                    self.info.upper
                },
            });
        }
        let mut lo = self.core.k_start;
        let mut hi = self.domain_end();
        if self.core.unbounded {
            let dim = 2 * self.core.cutoff + 1;
            let mut width = hi - lo;
            while self.lambda(hi)? <= mu {
                width *= 2.0;
                hi = lo + width;
                if self.branch_of(hi) > dim {
                    return Err(Error::MuAboveCutoff {
                        mu,
                        e_max: self.info.upper,
                    });
                }
            }
        }
        let tol = 1e-10 * mu.abs().max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let val = self.lambda(mid)?;
            if (val - mu).abs() <= tol && (hi - lo) < 1e-6 {
                return Ok(mid);
            }
            if val < mu {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let delta = 0.5 * (lo + hi);
        let val = self.lambda(delta)?;
        if (val - mu).abs() > tol {
            return Err(Error::MuNotInterior {
                mu,
                lo: self.info.lower,
                hi: self.info.upper,
            });
        }
        Ok(delta)
    }

    fn gauge(&self) -> Result<Arc<GaugeGrid>> {
        if let Some(g) = self.core.gauge.lock().unwrap().as_ref() {
            return Ok(g.clone());
        }
        let grid = build_gauge_grid(&self.core, self.core.gauge_nodes_per_half_band)?;
        let mut slot = self.core.gauge.lock().unwrap();
        if slot.is_none() {
            *slot = Some(Arc::new(grid));
        }
        Ok(slot.as_ref().unwrap().clone())
    }

    /// Gauge-fixed eigendata at an extended quasi-momentum. The lower half
    /// k < k_start is defined by conjugation of the reflected point.
    pub fn phi_node(&self, kappa: f64) -> Result<Arc<PhiNode>> {
        let reflected = kappa < self.core.k_start;
        let k = self.check_domain(kappa)?;
        let key = k.to_bits();
        let cached = self.core.phi_memo.lock().unwrap().get(&key).cloned();
        let node = match cached {
            Some(n) => n,
            None => {
                let gauge = self.gauge()?;
                let branch = self.branch_of(k);
                let fold = fold_quasimomentum(k);
                let fm = assemble_fibre_matrix(&self.core.potential, fold, self.core.cutoff)?;
                let (lambda, mut coeffs) = solve_fibre_branch(&fm, branch)?;
                // align the phase to the nearest gauge-grid node
                let nearest = gauge
                    .nodes
                    .iter()
                    .min_by(|a, b| {
                        (a.kappa - k)
                            .abs()
                            .partial_cmp(&(b.kappa - k).abs())
                            .unwrap()
                    })
                    .expect("gauge grid non-empty");
                let overlap =
                    bloch_inner_product(&nearest.coeffs, nearest.fold_k, &coeffs, fold);
                if overlap.norm() > 1e-12 {
                    let phase = (overlap / overlap.norm()).conj();
                    for c in coeffs.iter_mut() {
                        *c *= phase;
                    }
                }
                let node = Arc::new(PhiNode {
                    kappa: k,
                    fold_k: fold,
                    branch,
                    lambda,
                    coeffs: Arc::new(coeffs),
                    conjugated: false,
                });
                self.core
                    .phi_memo
                    .lock()
                    .unwrap()
                    .entry(key)
                    .or_insert_with(|| node.clone())
                    .clone()
            }
        };
        if !reflected {
            return Ok(node);
        }
        // conjugate reflection: Φ(x, 2 k_start − k) = conj(Φ(x, k)); in
        // coefficient space conj reverses the index and negates the fold
        let conj_coeffs: Vec<Complex64> =
            node.coeffs.iter().rev().map(|c| c.conj()).collect();
        Ok(Arc::new(PhiNode {
            kappa,
            fold_k: -node.fold_k,
            branch: node.branch,
            lambda: node.lambda,
            coeffs: Arc::new(conj_coeffs),
            conjugated: true,
        }))
    }

    /// Φ(x, k): gauge-fixed unfolded Bloch function.
    pub fn phi(&self, x: f64, kappa: f64) -> Result<Complex64> {
        let node = self.phi_node(kappa)?;
        Ok(eval_bloch(&node.coeffs, node.fold_k, x, BlochPart::Phi))
    }

    /// ∂Φ/∂x at fixed k.
    pub fn phi_dx(&self, x: f64, kappa: f64) -> Result<Complex64> {
        let node = self.phi_node(kappa)?;
        Ok(eval_bloch(&node.coeffs, node.fold_k, x, BlochPart::PhiDx))
    }

    /// Raw (phase-arbitrary) branch eigendata; enough for phase-invariant
    /// kernel quadrature and much cheaper than the gauged path because it
    /// never builds the gauge grid.
    pub(crate) fn branch_node_raw(&self, kappa: f64) -> Result<PhiNode> {
        let k = self.check_domain(kappa)?;
        let branch = self.branch_of(k);
        let fold = fold_quasimomentum(k);
        let fm = assemble_fibre_matrix(&self.core.potential, fold, self.core.cutoff)?;
        let (lambda, coeffs) = solve_fibre_branch(&fm, branch)?;
        Ok(PhiNode {
            kappa: k,
            fold_k: fold,
            branch,
            lambda,
            coeffs: Arc::new(coeffs),
            conjugated: false,
        })
    }
}

/// Conjugate-reflection-aware coefficient realification at a band edge:
/// rotate so the function is real in x, then pin the sign deterministically
/// via the largest-modulus coefficient.
fn realify(coeffs: &mut [Complex64], fold_k: f64) {
    let s = bloch_square_integral(coeffs, fold_k);
    if s.norm() > 1e-12 {
        let phase = Complex64::from_polar(1.0, -0.5 * s.arg());
        for c in coeffs.iter_mut() {
            *c *= phase;
        }
    }
    let mut best = 0usize;
    let mut best_norm = -1.0;
    for (i, c) in coeffs.iter().enumerate() {
        if c.norm() > best_norm + 1e-15 {
            best_norm = c.norm();
            best = i;
        }
    }
    let v = coeffs[best];
    let flip = if v.re.abs() > 1e-12 {
        v.re < 0.0
    } else {
        v.im < 0.0
    };
    if flip {
        for c in coeffs.iter_mut() {
            *c = -*c;
        }
    }
}

fn build_gauge_grid(core: &BandCore, nodes_per_half_band: usize) -> Result<GaugeGrid> {
    let mut nodes: Vec<GridNode> = Vec::new();
    // anchor at the band's base point, where the eigenvalue is simple
    {
        let fold = fold_quasimomentum(core.k_start);
        let fm = assemble_fibre_matrix(&core.potential, fold, core.cutoff)?;
        let (_, mut coeffs) = solve_fibre_branch(&fm, core.start)?;
        realify(&mut coeffs, fold);
        nodes.push(GridNode {
            kappa: core.k_start,
            fold_k: fold,
            coeffs: Arc::new(coeffs),
        });
    }
    let h = 0.5 / nodes_per_half_band as f64;
    for l in 0..core.multiplicity {
        let branch = core.start + l;
        for i in 0..nodes_per_half_band {
            let kappa = core.k_start + l as f64 / 2.0 + (i as f64 + 0.5) * h;
            let fold = fold_quasimomentum(kappa);
            let fm = assemble_fibre_matrix(&core.potential, fold, core.cutoff)?;
            let (_, mut coeffs) = solve_fibre_branch(&fm, branch)?;
            let prev = nodes.last().unwrap();
            let overlap = bloch_inner_product(&prev.coeffs, prev.fold_k, &coeffs, fold);
            if overlap.norm() < 0.5 {
                return Err(Error::GridTooCoarse {
                    overlap: overlap.norm(),
                    k_prev: prev.kappa,
                    k: kappa,
                });
            }
            let phase = (overlap / overlap.norm()).conj();
            for c in coeffs.iter_mut() {
                *c *= phase;
            }
            nodes.push(GridNode {
                kappa,
                fold_k: fold,
                coeffs: Arc::new(coeffs),
            });
        }
    }
    // bounded bands get an aligned endpoint node
    if !core.unbounded {
        let kappa = core.k_start + core.multiplicity as f64 / 2.0;
        let branch = core.start + core.multiplicity - 1;
        let fold = fold_quasimomentum(kappa);
        let fm = assemble_fibre_matrix(&core.potential, fold, core.cutoff)?;
        let (_, mut coeffs) = solve_fibre_branch(&fm, branch)?;
        let prev = nodes.last().unwrap();
        let overlap = bloch_inner_product(&prev.coeffs, prev.fold_k, &coeffs, fold);
        if overlap.norm() >= 0.5 {
            let phase = (overlap / overlap.norm()).conj();
            for c in coeffs.iter_mut() {
                *c *= phase;
            }
            nodes.push(GridNode {
                kappa,
                fold_k: fold,
                coeffs: Arc::new(coeffs),
            });
        }
    }
    Ok(GaugeGrid { nodes })
}

/// Build the Λ / Φ samplers for one genuine band of a grouped structure.
pub fn build_lambda_phi(
    bs: &BandStructure,
    genuine_index: usize,
    nodes_per_half_band: usize,
) -> Result<GenuineBand> {
    let info = bs.genuine[genuine_index].clone();
    let core = Arc::new(BandCore {
        potential: bs.potential.clone(),
        cutoff: bs.cutoff,
        start: info.start,
        k_start: info.k_start,
        multiplicity: info.multiplicity,
        unbounded: info.unbounded_or_truncated,
        lambda_memo: Mutex::new(HashMap::new()),
        phi_memo: Mutex::new(HashMap::new()),
        gauge: Mutex::new(None),
        gauge_nodes_per_half_band: nodes_per_half_band,
    });
    let gb = GenuineBand { info, core };
    // the gauge grid is what this operation promises; build it now
    gb.gauge()?;
    Ok(gb)
}

/// Same as [`build_lambda_phi`] but defers the gauge grid until a Φ value is
/// first requested. Λ, δ and raw branch data never need it.
pub fn lambda_phi_lazy(bs: &BandStructure, genuine_index: usize) -> GenuineBand {
    let info = bs.genuine[genuine_index].clone();
    let core = Arc::new(BandCore {
        potential: bs.potential.clone(),
        cutoff: bs.cutoff,
        start: info.start,
        k_start: info.k_start,
        multiplicity: info.multiplicity,
        unbounded: info.unbounded_or_truncated,
        lambda_memo: Mutex::new(HashMap::new()),
        phi_memo: Mutex::new(HashMap::new()),
        gauge: Mutex::new(None),
        gauge_nodes_per_half_band: DEFAULT_GAUGE_NODES,
    });
    GenuineBand { info, core }
}

/// Integrated density of states N(μ; H): filled genuine bands contribute
/// multiplicity/(2π); the band containing μ contributes the measure of
/// {k : Λ(k) < μ} over 2π, i.e. (δ − k_start)/π.
pub fn integrated_density_of_states(
    bs: &BandStructure,
    samplers: &[GenuineBand],
    mu: f64,
) -> Result<f64> {
    if mu > bs.e_max {
        return Err(Error::MuAboveCutoff { mu, e_max: bs.e_max });
    }
    let mut total = 0.0;
    for (g, sampler) in bs.genuine.iter().zip(samplers) {
        if mu <= g.lower {
            continue;
        }
        if !g.unbounded_or_truncated && mu >= g.upper {
            total += g.multiplicity as f64 / TWO_PI;
            continue;
        }
        let delta = sampler.solve_delta(mu)?;
        total += (delta - g.k_start) / std::f64::consts::PI;
    }
    Ok(total)
}

/// Band structure plus per-genuine-band samplers.
pub struct SpectralModel {
    pub bs: BandStructure,
    pub genuine: Vec<GenuineBand>,
}

impl SpectralModel {
    pub fn new(
        potential: &PeriodicPotential,
        e_max: f64,
        cutoff: usize,
        touch_tol: f64,
    ) -> Result<Self> {
        let bs = group_genuine(compute_bands(potential, e_max, cutoff)?, touch_tol);
        let genuine = (0..bs.genuine.len())
            .map(|i| lambda_phi_lazy(&bs, i))
            .collect();
        Ok(SpectralModel { bs, genuine })
    }

    pub fn ids(&self, mu: f64) -> Result<f64> {
        integrated_density_of_states(&self.bs, &self.genuine, mu)
    }

    pub fn classify(&self, mu: f64, edge_tol: f64) -> Result<Classification> {
        classify_mu(&self.bs, mu, edge_tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibre::PeriodicPotential;

    fn free() -> PeriodicPotential {
        PeriodicPotential::zero(0)
    }

    fn cosine() -> PeriodicPotential {
        PeriodicPotential::cosine(1.0, 1).unwrap()
    }

    #[test]
    fn free_band_edges_are_half_integer_squares() {
        let bs = compute_bands(&free(), 4.0, 24).unwrap();
        let expected = [(0.0, 0.25), (0.25, 1.0), (1.0, 2.25), (2.25, 4.0)];
        for (band, (lo, hi)) in bs.bands.iter().zip(&expected) {
            assert!((band.lower - lo).abs() < 1e-10, "band {}: {}", band.j, band.lower);
            assert!((band.upper - hi).abs() < 1e-10);
        }
    }

    #[test]
    fn cosine_band_edges_match_high_cutoff_oracle() {
        let bs = compute_bands(&cosine(), 2.0, 32).unwrap();
        // oracle: same edge computation at N = 256
        let oracle = compute_bands(&cosine(), 2.0, 256).unwrap();
        for (a, b) in bs.bands.iter().zip(&oracle.bands) {
            assert!((a.lower - b.lower).abs() < 1e-8);
            assert!((a.upper - b.upper).abs() < 1e-8);
        }
        // the first gap is strictly open
        assert!(bs.bands[0].upper < bs.bands[1].lower);
        // bands are ordered and non-overlapping
        for w in bs.bands.windows(2) {
            assert!(w[0].upper <= w[1].lower + 1e-12);
        }
    }

    #[test]
    fn free_bands_merge_into_one_unbounded_genuine_band() {
        let bs = group_genuine(compute_bands(&free(), 4.0, 24).unwrap(), 1e-9);
        assert_eq!(bs.genuine.len(), 1);
        let g = &bs.genuine[0];
        assert_eq!(g.start, 1);
        assert!(g.unbounded_or_truncated);
        assert!((g.lower - 0.0).abs() < 1e-10);
    }

    #[test]
    fn cosine_low_bands_stay_separate() {
        let bs = group_genuine(compute_bands(&cosine(), 5.0, 48).unwrap(), 1e-9);
        let n_listed = bs.bands.len().min(4);
        for i in 0..n_listed {
            assert_eq!(bs.genuine[i].multiplicity, 1, "band {} merged", i + 1);
        }
    }

    #[test]
    fn large_touch_tol_merges_across_the_first_gap() {
        let bs = compute_bands(&cosine(), 2.0, 32).unwrap();
        let gap1 = bs.bands[1].lower - bs.bands[0].upper;
        let merged = group_genuine(bs, gap1 + 0.1);
        assert!(merged.genuine[0].multiplicity >= 2);
    }

    #[test]
    fn free_lambda_is_k_squared() {
        let bs = group_genuine(compute_bands(&free(), 9.0, 24).unwrap(), 1e-9);
        let gb = lambda_phi_lazy(&bs, 0);
        for &k in &[0.1, 0.5, 0.77, 1.0, 1.9, 2.5] {
            let lam = gb.lambda(k).unwrap();
            assert!((lam - k * k).abs() < 1e-10, "Λ({k}) = {lam}");
        }
        // symmetric about k_start = 0
        assert!((gb.lambda(-0.3).unwrap() - 0.09).abs() < 1e-10);
    }

    #[test]
    fn free_delta_solves() {
        let bs = group_genuine(compute_bands(&free(), 9.0, 24).unwrap(), 1e-9);
        let gb = lambda_phi_lazy(&bs, 0);
        assert!((gb.solve_delta(1.0).unwrap() - 1.0).abs() < 1e-9);
        assert!((gb.solve_delta(0.25).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn cosine_delta_reproduces_mu_through_high_cutoff_oracle() {
        let model = SpectralModel::new(&cosine(), 3.0, 32, 1e-9).unwrap();
        let g = &model.bs.genuine[1];
        let mu = 0.5 * (g.lower + g.upper);
        let delta = model.genuine[1].solve_delta(mu).unwrap();
        // oracle: independent N = 256 eigensolve at the folded momentum
        let fold = fold_quasimomentum(delta);
        let oracle =
            solve_fibre_values(&assemble_fibre_matrix(&cosine(), fold, 256).unwrap()).unwrap();
        let branch = model.genuine[1].branch_of(delta);
        assert!(
            (oracle[branch - 1] - mu).abs() < 1e-8,
            "Λ(δ) via oracle: {} vs μ {}",
            oracle[branch - 1],
            mu
        );
    }

    #[test]
    fn delta_outside_band_is_rejected() {
        let model = SpectralModel::new(&cosine(), 3.0, 32, 1e-9).unwrap();
        let g = &model.bs.genuine[1];
        assert!(matches!(
            model.genuine[1].solve_delta(g.lower - 0.1),
            Err(Error::MuNotInterior { .. })
        ));
    }

    #[test]
    fn free_ids_is_sqrt_mu_over_pi() {
        let model = SpectralModel::new(&free(), 12.0, 24, 1e-9).unwrap();
        for &mu in &[0.1, 1.0, 4.0, 10.0] {
            let n = model.ids(mu).unwrap();
            let exact = mu.sqrt() / std::f64::consts::PI;
            assert!((n - exact).abs() <= 1e-8, "N({mu}) = {n} vs {exact}");
        }
        assert_eq!(model.ids(-0.5).unwrap(), 0.0);
    }

    #[test]
    fn ids_is_constant_across_a_gap() {
        let model = SpectralModel::new(&cosine(), 3.0, 32, 1e-9).unwrap();
        let g0 = &model.bs.genuine[0];
        let g1 = &model.bs.genuine[1];
        let mid = 0.5 * (g0.upper + g1.lower);
        let w = (g1.lower - g0.upper) / 4.0;
        let a = model.ids(mid - w).unwrap();
        let b = model.ids(mid + w).unwrap();
        let expect = 1.0 / TWO_PI;
        assert!((a - expect).abs() < 1e-12 && (b - expect).abs() < 1e-12);
    }

    #[test]
    fn classification_dichotomy() {
        let free_model = SpectralModel::new(&free(), 4.0, 24, 1e-9).unwrap();
        assert!(matches!(
            free_model.classify(1.0, 1e-6).unwrap(),
            Classification::Interior { .. }
        ));
        let model = SpectralModel::new(&cosine(), 3.0, 32, 1e-9).unwrap();
        let g0 = &model.bs.genuine[0];
        let g1 = &model.bs.genuine[1];
        let gap_mu = 0.5 * (g0.upper + g1.lower);
        assert_eq!(model.classify(gap_mu, 1e-6).unwrap(), Classification::Gap);
        assert_eq!(
            model.classify(g0.upper, 1e-6).unwrap(),
            Classification::Edge
        );
        let mid_band2 = 0.5 * (g1.lower + g1.upper);
        assert!(matches!(
            model.classify(mid_band2, 1e-6).unwrap(),
            Classification::Interior { genuine_index: 1 }
        ));
    }

    #[test]
    fn sampled_lambda_is_strictly_increasing() {
        let model = SpectralModel::new(&cosine(), 3.0, 32, 1e-9).unwrap();
        for gb in &model.genuine {
            if gb.info.unbounded_or_truncated {
                continue;
            }
            let lo = gb.info.k_start;
            let hi = gb.info.k_start + gb.info.multiplicity as f64 / 2.0;
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=200 {
                let k = lo + (hi - lo) * i as f64 / 200.0;
                let lam = gb.lambda(k).unwrap();
                assert!(lam > prev, "Λ not increasing at k = {k}");
                prev = lam;
            }
        }
    }

    #[test]
    fn free_phi_is_a_plane_wave_up_to_phase() {
        let bs = group_genuine(compute_bands(&free(), 9.0, 24).unwrap(), 1e-9);
        let gb = build_lambda_phi(&bs, 0, 64).unwrap();
        for &k in &[0.13, 0.61, 1.2] {
            for &x in &[0.0, 1.0, 5.5] {
                let v = gb.phi(x, k).unwrap();
                assert!(
                    (v.norm_sqr() - 1.0 / TWO_PI).abs() < 1e-10,
                    "|Φ({x},{k})|² = {}",
                    v.norm_sqr()
                );
            }
        }
    }

    #[test]
    fn phi_reflection_is_exact_conjugation() {
        let bs = group_genuine(compute_bands(&cosine(), 3.0, 24).unwrap(), 1e-9);
        let gb = build_lambda_phi(&bs, 1, 64).unwrap();
        let k_start = gb.info.k_start;
        for &t in &[0.05, 0.21] {
            for &x in &[0.3, 2.0] {
                let plus = gb.phi(x, k_start + t).unwrap();
                let minus = gb.phi(x, k_start - t).unwrap();
                assert!((minus - plus.conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn phi_is_continuous_in_k() {
        // oracle: halving the step halves the increment (Φ analytic in k)
        let bs = group_genuine(compute_bands(&cosine(), 3.0, 24).unwrap(), 1e-9);
        let gb = build_lambda_phi(&bs, 0, 128).unwrap();
        let k = 0.17;
        let sup_diff = |h: f64| -> f64 {
            let mut worst = 0.0f64;
            for i in 0..64 {
                let x = i as f64 * TWO_PI / 64.0;
                let d = (gb.phi(x, k + h).unwrap() - gb.phi(x, k).unwrap()).norm();
                worst = worst.max(d);
            }
            worst
        };
        let d1 = sup_diff(1e-3);
        let d2 = sup_diff(5e-4);
        let ratio = d2 / d1;
        assert!(
            (0.35..=0.65).contains(&ratio),
            "increment ratio {ratio} not linear"
        );
    }

    #[test]
    fn phi_continuity_across_a_band_touching() {
        // free bands touch at every half-integer; Φ = e^{ikx} must continue
        // smoothly through κ = 1/2
        let bs = group_genuine(compute_bands(&free(), 9.0, 24).unwrap(), 1e-9);
        let gb = build_lambda_phi(&bs, 0, 64).unwrap();
        let eps = 1e-5;
        for &x in &[0.7, 3.1] {
            let below = gb.phi(x, 0.5 - eps).unwrap();
            let above = gb.phi(x, 0.5 + eps).unwrap();
            assert!(
                (below - above).norm() < 1e-3,
                "jump {} at the touching",
                (below - above).norm()
            );
        }
    }

    #[test]
    fn one_sided_limits_at_touching_are_orthogonal() {
        // equivalently: the period integral of Φ² vanishes at the touching
        let bs = group_genuine(compute_bands(&free(), 9.0, 24).unwrap(), 1e-9);
        let gb = build_lambda_phi(&bs, 0, 64).unwrap();
        for side in [0.5 - 1e-9, 0.5 + 1e-9] {
            let node = gb.phi_node(side).unwrap();
            let s = bloch_square_integral(&node.coeffs, node.fold_k);
            assert!(s.norm() < 1e-6, "∫Φ² = {} at κ = {side}", s.norm());
        }
    }

    #[test]
    fn phi_is_real_up_to_phase_at_band_edges() {
        let bs = group_genuine(compute_bands(&cosine(), 3.0, 24).unwrap(), 1e-9);
        let gb = build_lambda_phi(&bs, 1, 64).unwrap();
        for kappa in [gb.info.k_start, gb.info.k_start + 0.5] {
            let node = gb.phi_node(kappa).unwrap();
            let s = bloch_square_integral(&node.coeffs, node.fold_k);
            assert!(
                (s.norm() - 1.0).abs() < 1e-6,
                "|∫Φ²| = {} at edge {kappa}",
                s.norm()
            );
        }
    }

    #[test]
    fn gauge_norm_stays_unit() {
        let bs = group_genuine(compute_bands(&cosine(), 3.0, 24).unwrap(), 1e-9);
        let gb = build_lambda_phi(&bs, 0, 64).unwrap();
        for i in 0..=20 {
            let k = gb.info.k_start + 0.5 * i as f64 / 20.0 * 0.98 + 1e-3;
            let node = gb.phi_node(k).unwrap();
            let norm: f64 = node.coeffs.iter().map(|c| c.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn mu_above_cutoff_is_an_error() {
        let model = SpectralModel::new(&free(), 4.0, 24, 1e-9).unwrap();
        assert!(matches!(
            model.ids(5.0),
            Err(Error::MuAboveCutoff { .. })
        ));
        assert!(matches!(
            model.classify(5.0, 1e-6),
            Err(Error::MuAboveCutoff { .. })
        ));
    }
}
