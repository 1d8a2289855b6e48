//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("potential coefficient at m = {m} violates reality: v(-m) must equal conj(v(m))")]
    RealityViolation { m: i64 },

    #[error("unknown potential preset `{0}` (expected \"zero\" or \"cosine(A)\")")]
    UnknownPreset(String),

    #[error("plane-wave cutoff N = {n} is below the potential order M = {m}; coefficients would be truncated")]
    CutoffBelowOrder { n: usize, m: usize },

    #[error("quasi-momentum k = {0} outside the fundamental domain [-1/2, 1/2)")]
    QuasiMomentumOutOfRange(f64),

    #[error("eigensolver did not converge (off-diagonal residual {residual:.3e} after {iterations} iterations)")]
    EigenNoConvergence { residual: f64, iterations: usize },

    #[error("eigensolve residual {residual:.3e} exceeds the required tolerance {tol:.3e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("band index j = {j} out of range 1..={max}")]
    BandIndexOutOfRange { j: usize, max: usize },

    #[error("cutoff N = {n} insufficient for E_max = {e_max}: band {j} edge moves by {disagreement:.3e} when N is doubled; increase the cutoff")]
    CutoffInsufficient {
        n: usize,
        e_max: f64,
        j: usize,
        disagreement: f64,
    },

    #[error("E_max = {e_max} does not exceed the bottom of the spectrum ({bottom})")]
    EmaxBelowSpectrum { e_max: f64, bottom: f64 },

    #[error("k grid too coarse for gauge continuity (overlap modulus {overlap:.3} between k = {k_prev} and k = {k})")]
    GridTooCoarse { overlap: f64, k_prev: f64, k: f64 },

    #[error("mu = {mu} not interior to genuine band [{lo}, {hi}]")]
    MuNotInterior { mu: f64, lo: f64, hi: f64 },

    #[error("mu = {mu} exceeds the band-structure cutoff E_max = {e_max}")]
    MuAboveCutoff { mu: f64, e_max: f64 },

    #[error("mu = {mu} lies within edge_tol of a band edge; the partial-band evaluator is undefined there (use the full-band edge evaluator)")]
    EdgeMu { mu: f64 },

    #[error("max_sep = {0} too small for the decay fit (need at least 20)")]
    FitUnderdetermined(f64),

    #[error("grid spacing {spacing} too coarse for the kernel oscillation; need spacing <= {bound:.6}")]
    SpacingTooCoarse { spacing: f64, bound: f64 },

    #[error("discretization not positivity-preserving; eigenvalue {value:.6e} outside [{lo:.1e}, {hi}]; refine grid or k-quadrature")]
    PositivityLost { value: f64, lo: f64, hi: String },

    #[error("adaptive quadrature did not converge (error estimate {err:.3e} > tol {tol:.3e}); integrand may be non-integrable")]
    QuadratureNoConvergence { err: f64, tol: f64 },

    #[error("mean window T = {0} below the minimum 100")]
    MeanWindowTooShort(f64),

    #[error("config validation: {0}")]
    ConfigInvalid(String),

    #[error("fit needs at least 4 usable rows with alpha >= {alpha_min}; found {found}")]
    FitTooFewRows { alpha_min: f64, found: usize },

    #[error("rank-deficient fit design: {0}")]
    FitRankDeficient(String),

    #[error("boundedness check requires a Gap classification; mu is classified {0}")]
    NotGap(String),

    #[error("unknown test function spec `{0}` (expected p:n, q:n, renyi:gamma, vn, or linear)")]
    UnknownFunction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
