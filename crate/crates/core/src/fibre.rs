//! Periodic potential and Floquet-Bloch fibre eigenproblems.
//!
//! The operator -d²/dx² + V(x) with a 2π-periodic potential decomposes into
//! fibres H(k) over the quasi-momentum circle. Each fibre is discretized in
//! the plane-wave basis e^{i(n+k)x}/√(2π), n = -N..N, where the
//! quasi-periodic boundary conditions hold exactly per basis element and the
//! matrix is diagonal-plus-banded: entry (m, n) = (n+k)² δ_{mn} + v_{m-n}.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, RESIDUAL_TOL};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Reality-check tolerance for user-supplied coefficient lists.
const REALITY_TOL: f64 = 1e-12;

/// A real 2π-periodic potential given by a finite Fourier series
/// V(x) = Σ_{|m| <= M} v_m e^{imx}, with v_{-m} = conj(v_m).
#[derive(Clone, Debug)]
pub struct PeriodicPotential {
    order: usize,
    /// coefficients for m = -M..=M, index m + M
    coeffs: Vec<Complex64>,
}

/// How a potential is specified: a named preset or an explicit list of
/// (m, v_m) Fourier coefficients.
#[derive(Clone, Debug)]
pub enum PotentialSpec {
    Preset(String),
    Coefficients(Vec<(i64, Complex64)>),
}

/// Build and validate a potential from its spec. Presets: "zero" and
/// "cosine(A)" meaning V(x) = 2A cos(x), i.e. v_{±1} = A.
pub fn potential_from_spec(spec: &PotentialSpec, order: usize) -> Result<PeriodicPotential> {
    match spec {
        PotentialSpec::Preset(name) => {
            let name = name.trim();
            if name == "zero" {
                return Ok(PeriodicPotential::zero(order));
            }
            if let Some(rest) = name.strip_prefix("cosine(") {
                if let Some(body) = rest.strip_suffix(')') {
                    if let Ok(a) = body.trim().parse::<f64>() {
                        return PeriodicPotential::cosine(a, order);
                    }
                }
            }
            Err(Error::UnknownPreset(name.to_string()))
        }
        PotentialSpec::Coefficients(list) => PeriodicPotential::from_coefficients(list, order),
    }
}

impl PeriodicPotential {
    pub fn zero(order: usize) -> Self {
        PeriodicPotential {
            order,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * order + 1],
        }
    }

    /// v_{±1} = A; requires order >= 1.
    pub fn cosine(amplitude: f64, order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::CutoffBelowOrder { n: order, m: 1 });
        }
        let mut p = PeriodicPotential::zero(order);
        p.coeffs[order - 1] = Complex64::new(amplitude, 0.0);
        p.coeffs[order + 1] = Complex64::new(amplitude, 0.0);
        Ok(p)
    }

    pub fn from_coefficients(list: &[(i64, Complex64)], order: usize) -> Result<Self> {
        let mut p = PeriodicPotential::zero(order);
        let m = order as i64;
        for &(idx, v) in list {
            if idx.unsigned_abs() as usize > order {
                return Err(Error::CutoffBelowOrder {
                    n: order,
                    m: idx.unsigned_abs() as usize,
                });
            }
            p.coeffs[(idx + m) as usize] = v;
        }
        let scale = p
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(1.0f64, f64::max);
        for idx in 1..=m {
            let plus = p.coeffs[(idx + m) as usize];
            let minus = p.coeffs[(m - idx) as usize];
            if (minus - plus.conj()).norm() > REALITY_TOL * scale {
                return Err(Error::RealityViolation { m: idx });
            }
        }
        if p.coeffs[m as usize].im.abs() > REALITY_TOL * scale {
            return Err(Error::RealityViolation { m: 0 });
        }
        Ok(p)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Fourier coefficient v_m (0 beyond the truncation order).
    pub fn coefficient(&self, m: i64) -> Complex64 {
        let order = self.order as i64;
        if m.abs() > order {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(m + order) as usize]
        }
    }

    /// Pointwise value of V; real by the coefficient constraint.
    pub fn eval(&self, x: f64) -> f64 {
        let order = self.order as i64;
        let mut s = Complex64::new(0.0, 0.0);
        for m in -order..=order {
            s += self.coefficient(m) * Complex64::new(0.0, m as f64 * x).exp();
        }
        s.re
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }
}

/// A fibre matrix together with the quasi-momentum and cutoff it was
/// assembled at.
#[derive(Clone, Debug)]
pub struct FibreMatrix {
    pub k: f64,
    pub cutoff: usize,
    pub matrix: CMatrix,
}

/// Assemble H(k) in the plane-wave basis (rows/columns indexed n = -N..N).
pub fn assemble_fibre_matrix(
    potential: &PeriodicPotential,
    k: f64,
    cutoff: usize,
) -> Result<FibreMatrix> {
    if cutoff < potential.order() {
        return Err(Error::CutoffBelowOrder {
            n: cutoff,
            m: potential.order(),
        });
    }
    if !(-0.5..0.5).contains(&k) {
        return Err(Error::QuasiMomentumOutOfRange(k));
    }
    let dim = 2 * cutoff + 1;
    let mut m = CMatrix::zeros(dim);
    let n0 = cutoff as i64;
    for r in 0..dim {
        let nr = r as i64 - n0;
        for c in 0..dim {
            let nc = c as i64 - n0;
            let mut entry = potential.coefficient(nr - nc);
            if r == c {
                let f = nc as f64 + k;
                entry += Complex64::new(f * f, 0.0);
            }
            m.set(r, c, entry);
        }
    }
    Ok(FibreMatrix {
        k,
        cutoff,
        matrix: m,
    })
}

/// Eigenvalues and eigenvectors of a fibre operator, ascending, with the
/// achieved relative residual.
#[derive(Clone, Debug)]
pub struct FibreEigenSystem {
    pub k: f64,
    pub cutoff: usize,
    pub eigenvalues: Vec<f64>,
    /// column j holds the coefficients of φ_{j+1} in the basis e^{i(n+k)x}/√(2π)
    pub eigenvectors: CMatrix,
    pub residual_tol: f64,
}

/// Full solve of a fibre eigenproblem. The relative residual
/// max_j ‖H c_j − λ_j c_j‖ / ‖H‖ is computed and must satisfy the crate-wide
/// tolerance.
pub fn solve_fibre(fm: &FibreMatrix) -> Result<FibreEigenSystem> {
    let (values, vectors) = linalg::hermitian_eigen(&fm.matrix)?;
    let scale = fm.matrix.norm_inf().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for j in 0..fm.matrix.n {
        let c = vectors.column(j);
        let hv = fm.matrix.matvec(&c);
        let res: f64 = hv
            .iter()
            .zip(&c)
            .map(|(h, v)| (h - values[j] * v).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(res / scale);
    }
    if worst > RESIDUAL_TOL {
        return Err(Error::ResidualTooLarge {
            residual: worst,
            tol: RESIDUAL_TOL,
        });
    }
    Ok(FibreEigenSystem {
        k: fm.k,
        cutoff: fm.cutoff,
        eigenvalues: values,
        eigenvectors: vectors,
        residual_tol: worst,
    })
}

/// Single-branch solve: eigenvalue λ_j and its coefficient vector
/// (j is 1-based). Used by the samplers and quadrature caches.
pub fn solve_fibre_branch(fm: &FibreMatrix, j: usize) -> Result<(f64, Vec<Complex64>)> {
    let dim = fm.matrix.n;
    if j == 0 || j > dim {
        return Err(Error::BandIndexOutOfRange { j, max: dim });
    }
    let (lam, vec) = linalg::hermitian_eigen_branch(&fm.matrix, j - 1)?;
    let scale = fm.matrix.norm_inf().max(f64::MIN_POSITIVE);
    let hv = fm.matrix.matvec(&vec);
    let res: f64 = hv
        .iter()
        .zip(&vec)
        .map(|(h, v)| (h - lam * v).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if res / scale > RESIDUAL_TOL {
        return Err(Error::ResidualTooLarge {
            residual: res / scale,
            tol: RESIDUAL_TOL,
        });
    }
    Ok((lam, vec))
}

/// Eigenvalues only — the cheap path for band-edge scans and Λ sampling.
pub fn solve_fibre_values(fm: &FibreMatrix) -> Result<Vec<f64>> {
    linalg::hermitian_eigenvalues(&fm.matrix)
}

impl FibreEigenSystem {
    fn check_band(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.eigenvalues.len() {
            return Err(Error::BandIndexOutOfRange {
                j,
                max: self.eigenvalues.len(),
            });
        }
        Ok(())
    }

    /// Bloch function φ_j(x, k) = Σ_n c_n e^{i(n+k)x}/√(2π), j 1-based.
    pub fn bloch_eval(&self, j: usize, x: f64) -> Result<Complex64> {
        self.check_band(j)?;
        Ok(eval_bloch(
            &self.eigenvectors.column(j - 1),
            self.k,
            x,
            BlochPart::Phi,
        ))
    }

    /// Periodic part e_j(x, k) = e^{-ikx} φ_j(x, k).
    pub fn periodic_part(&self, j: usize, x: f64) -> Result<Complex64> {
        self.check_band(j)?;
        Ok(eval_bloch(
            &self.eigenvectors.column(j - 1),
            self.k,
            x,
            BlochPart::Periodic,
        ))
    }

    /// x-derivative of the periodic part.
    pub fn periodic_part_dx(&self, j: usize, x: f64) -> Result<Complex64> {
        self.check_band(j)?;
        Ok(eval_bloch(
            &self.eigenvectors.column(j - 1),
            self.k,
            x,
            BlochPart::PeriodicDx,
        ))
    }
}

pub enum BlochPart {
    Phi,
    PhiDx,
    Periodic,
    PeriodicDx,
}

/// Evaluate a Bloch sum from its coefficient vector. The power table
/// z^n = e^{inx} is built by iterated multiplication from a single sincos.
pub fn eval_bloch(coeffs: &[Complex64], k: f64, x: f64, part: BlochPart) -> Complex64 {
    let dim = coeffs.len();
    let n_max = ((dim - 1) / 2) as i64;
    let z = Complex64::new(0.0, x).exp();
    let zinv = z.conj();
    let weight = |n: i64| -> Complex64 {
        match part {
            BlochPart::Phi | BlochPart::Periodic => Complex64::new(1.0, 0.0),
            BlochPart::PhiDx => Complex64::new(0.0, n as f64 + k),
            BlochPart::PeriodicDx => Complex64::new(0.0, n as f64),
        }
    };
    let mut sum = coeffs[n_max as usize] * weight(0);
    // walk outward from n = 0 so the powers accumulate incrementally
    let mut zp = Complex64::new(1.0, 0.0);
    let mut zm = Complex64::new(1.0, 0.0);
    for n in 1..=n_max {
        zp *= z;
        zm *= zinv;
        sum += coeffs[(n + n_max) as usize] * weight(n) * zp;
        sum += coeffs[(n_max - n) as usize] * weight(-n) * zm;
    }
    let carrier = match part {
        BlochPart::Phi | BlochPart::PhiDx => Complex64::new(0.0, k * x).exp(),
        BlochPart::Periodic | BlochPart::PeriodicDx => Complex64::new(1.0, 0.0),
    };
    sum * carrier / TWO_PI.sqrt()
}

/// L²(0, 2π) inner product of two Bloch functions possibly living at
/// different quasi-momenta. Exact for the plane-wave basis:
/// <φ₁, φ₂> = Σ_{n,m} conj(c¹_n) c²_m g(m − n + k₂ − k₁) with
/// g(t) = e^{iπt} sin(πt)/(πt).
pub fn bloch_inner_product(
    c1: &[Complex64],
    k1: f64,
    c2: &[Complex64],
    k2: f64,
) -> Complex64 {
    let dim = c1.len();
    debug_assert_eq!(dim, c2.len());
    let dk = k2 - k1;
    let mut total = Complex64::new(0.0, 0.0);
    // g depends only on the index difference s = m - n
    let s_min = -(dim as i64 - 1);
    for s in s_min..dim as i64 {
        let g = g_kernel(s as f64 + dk);
        if g.norm_sqr() == 0.0 {
            continue;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..dim as i64 {
            let m = n + s;
            if m < 0 || m >= dim as i64 {
                continue;
            }
            acc += c1[n as usize].conj() * c2[m as usize];
        }
        total += acc * g;
    }
    total
}

/// (1/2π) ∫_0^{2π} e^{itx} dx = e^{iπt} sinc(πt).
fn g_kernel(t: f64) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let pt = std::f64::consts::PI * t;
    let s = pt.sin() / pt;
    if s.abs() < 1e-300 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, pt).exp() * s
}

/// ∫_0^{2π} φ(x)² dx for a Bloch function; meaningful as a period integral
/// when 2k is an integer (band edges and touching points).
pub fn bloch_square_integral(coeffs: &[Complex64], k: f64) -> Complex64 {
    let dim = coeffs.len();
    let mut total = Complex64::new(0.0, 0.0);
    for n in 0..dim as i64 {
        for m in 0..dim as i64 {
            let t = (n + m) as f64 - (dim as i64 - 1) as f64 + 2.0 * k;
            let g = g_kernel(t);
            if g.norm_sqr() == 0.0 {
                continue;
            }
            total += coeffs[n as usize] * coeffs[m as usize] * g;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_their_definitions() {
        let zero = potential_from_spec(&PotentialSpec::Preset("zero".into()), 4).unwrap();
        assert!(zero.is_zero());
        let cos = potential_from_spec(&PotentialSpec::Preset("cosine(1)".into()), 4).unwrap();
        assert_eq!(cos.coefficient(1), Complex64::new(1.0, 0.0));
        assert_eq!(cos.coefficient(-1), Complex64::new(1.0, 0.0));
        assert_eq!(cos.coefficient(0), Complex64::new(0.0, 0.0));
        // V(x) = 2 cos x
        assert!((cos.eval(0.0) - 2.0).abs() < 1e-12);
        assert!((cos.eval(std::f64::consts::PI) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn reality_violation_names_the_offending_index() {
        let bad = vec![
            (1i64, Complex64::new(0.0, 1.0)),
            (-1i64, Complex64::new(0.0, 1.0)),
        ];
        match PeriodicPotential::from_coefficients(&bad, 2) {
            Err(Error::RealityViolation { m }) => assert_eq!(m, 1),
            other => panic!("expected reality violation, got {other:?}"),
        }
    }

    #[test]
    fn free_fibre_matrix_is_the_squared_momentum_diagonal() {
        let v = PeriodicPotential::zero(0);
        let fm = assemble_fibre_matrix(&v, 0.25, 1).unwrap();
        let expected = [0.5625, 0.0625, 1.5625];
        for (i, e) in expected.iter().enumerate() {
            assert!((fm.matrix.at(i, i).re - e).abs() < 1e-15);
            assert!(fm.matrix.at(i, i).im == 0.0);
        }
    }

    #[test]
    fn cosine_fibre_matrix_is_toeplitz_tridiagonal() {
        let v = PeriodicPotential::cosine(1.0, 1).unwrap();
        let fm = assemble_fibre_matrix(&v, 0.0, 1).unwrap();
        let diag = [1.0, 0.0, 1.0];
        for (i, d) in diag.iter().enumerate() {
            assert!((fm.matrix.at(i, i).re - d).abs() < 1e-15);
        }
        for i in 0..2 {
            assert!((fm.matrix.at(i, i + 1) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            assert!((fm.matrix.at(i + 1, i) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        assert!(fm.matrix.at(0, 2).norm() == 0.0 && fm.matrix.at(2, 0).norm() == 0.0);
    }

    #[test]
    fn cutoff_below_order_is_rejected() {
        let v = PeriodicPotential::cosine(1.0, 3).unwrap();
        assert!(matches!(
            assemble_fibre_matrix(&v, 0.0, 2),
            Err(Error::CutoffBelowOrder { .. })
        ));
    }

    #[test]
    fn free_spectrum_is_shifted_squares() {
        let v = PeriodicPotential::zero(0);
        let fm = assemble_fibre_matrix(&v, 0.3, 2).unwrap();
        let sys = solve_fibre(&fm).unwrap();
        let expected = [0.09, 0.49, 1.69, 2.89, 5.29];
        for (got, want) in sys.eigenvalues.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!(sys.residual_tol <= RESIDUAL_TOL);
    }

    #[test]
    fn eigenvalues_are_even_in_k() {
        let v = PeriodicPotential::cosine(1.0, 4).unwrap();
        let plus = solve_fibre(&assemble_fibre_matrix(&v, 0.3, 16).unwrap()).unwrap();
        let minus = solve_fibre(&assemble_fibre_matrix(&v, -0.3, 16).unwrap()).unwrap();
        for (a, b) in plus.eigenvalues.iter().zip(&minus.eigenvalues).take(10) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn ground_eigenvalue_converges_against_high_cutoff_oracle() {
        // oracle: the same assembly at a much larger cutoff
        let v = PeriodicPotential::cosine(1.0, 4).unwrap();
        let coarse = solve_fibre(&assemble_fibre_matrix(&v, 0.0, 32).unwrap()).unwrap();
        let oracle = solve_fibre_values(&assemble_fibre_matrix(&v, 0.0, 256).unwrap()).unwrap();
        assert!(
            (coarse.eigenvalues[0] - oracle[0]).abs() < 1e-8,
            "lambda_1(0): {} vs oracle {}",
            coarse.eigenvalues[0],
            oracle[0]
        );
    }

    #[test]
    fn cutoff_convergence_is_monotone_for_low_bands() {
        // monotone until the plateau at eigensolver roundoff (~ε N², since
        // the matrix norm grows with the cutoff)
        let v = PeriodicPotential::cosine(1.0, 4).unwrap();
        let solves: Vec<Vec<f64>> = [8usize, 16, 32, 64, 128]
            .iter()
            .map(|&n| solve_fibre_values(&assemble_fibre_matrix(&v, 0.21, n).unwrap()).unwrap())
            .collect();
        let floor = 1e-11;
        for j in 0..8 {
            let mut prev_gap = f64::INFINITY;
            for w in 0..3 {
                let gap = (solves[w][j] - solves[w + 1][j]).abs();
                assert!(
                    gap <= prev_gap.max(floor),
                    "band {j}: |λ^{{N}} − λ^{{2N}}| not decreasing ({gap} after {prev_gap})"
                );
                prev_gap = gap.max(floor);
            }
        }
    }

    #[test]
    fn bloch_function_of_free_fibre_is_a_plane_wave() {
        let v = PeriodicPotential::zero(0);
        let sys = solve_fibre(&assemble_fibre_matrix(&v, 0.3, 4).unwrap()).unwrap();
        for j in 1..=5 {
            for &x in &[0.0, 1.3, 4.0, 6.0] {
                let val = sys.bloch_eval(j, x).unwrap();
                assert!(
                    (val.norm_sqr() - 1.0 / TWO_PI).abs() < 1e-12,
                    "free |φ|² must be 1/(2π)"
                );
            }
        }
    }

    #[test]
    fn bloch_normalization_by_quadrature() {
        let v = PeriodicPotential::cosine(1.0, 2).unwrap();
        let sys = solve_fibre(&assemble_fibre_matrix(&v, 0.17, 24).unwrap()).unwrap();
        let m = 4096;
        let h = TWO_PI / m as f64;
        let mut total = 0.0;
        for i in 0..m {
            total += sys.bloch_eval(2, i as f64 * h).unwrap().norm_sqr() * h;
        }
        assert!((total - 1.0).abs() < 1e-10, "norm {total}");
    }

    #[test]
    fn periodic_part_repeats_exactly() {
        let v = PeriodicPotential::cosine(0.7, 2).unwrap();
        let sys = solve_fibre(&assemble_fibre_matrix(&v, 0.11, 16).unwrap()).unwrap();
        for &x in &[0.2, 2.9] {
            let a = sys.periodic_part(3, x).unwrap();
            let b = sys.periodic_part(3, x + TWO_PI).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn band_index_out_of_range_is_an_error() {
        let v = PeriodicPotential::zero(0);
        let sys = solve_fibre(&assemble_fibre_matrix(&v, 0.0, 2).unwrap()).unwrap();
        assert!(matches!(
            sys.bloch_eval(6, 0.0),
            Err(Error::BandIndexOutOfRange { .. })
        ));
        assert!(sys.bloch_eval(5, 0.0).is_ok());
    }

    #[test]
    fn inner_product_handles_basis_shift_across_the_zone_edge() {
        // free plane waves: φ at k = 0.49 (branch n = 0) and the same physical
        // wave at k = -0.49 written as branch n = 1; x-space overlap ≈ 1 - ε
        let v = PeriodicPotential::zero(0);
        let s1 = solve_fibre(&assemble_fibre_matrix(&v, 0.49, 2).unwrap()).unwrap();
        let s2 = solve_fibre(&assemble_fibre_matrix(&v, -0.49, 2).unwrap()).unwrap();
        // at k=0.49 branch 1 is n=0 (0.2401); at k=-0.49 branch 2 is n=1 (0.2601)
        let c1 = s1.eigenvectors.column(0);
        let c2 = s2.eigenvectors.column(1);
        let o = bloch_inner_product(&c1, 0.49, &c2, -0.49);
        assert!(o.norm() > 0.99, "cross-zone overlap {}", o.norm());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn random_real_potentials_give_hermitian_fibres(
                re in proptest::collection::vec(-2.0f64..2.0, 3),
                im in proptest::collection::vec(-2.0f64..2.0, 3),
                k in -0.5f64..0.5,
            ) {
                let list: Vec<(i64, Complex64)> = (1..=3i64)
                    .map(|m| (m, Complex64::new(re[(m-1) as usize], im[(m-1) as usize])))
                    .chain((1..=3i64).map(|m| (-m, Complex64::new(re[(m-1) as usize], -im[(m-1) as usize]))))
                    .collect();
                let v = PeriodicPotential::from_coefficients(&list, 3).unwrap();
                let fm = assemble_fibre_matrix(&v, k, 8).unwrap();
                prop_assert!(fm.matrix.hermiticity_defect() == 0.0);
            }

            #[test]
            fn rayleigh_quotient_consistency(k in -0.5f64..0.5) {
                let v = PeriodicPotential::cosine(1.0, 2).unwrap();
                let fm = assemble_fibre_matrix(&v, k, 12).unwrap();
                let sys = solve_fibre(&fm).unwrap();
                let scale = fm.matrix.norm_inf();
                for j in 0..5 {
                    let c = sys.eigenvectors.column(j);
                    let hv = fm.matrix.matvec(&c);
                    let rq: Complex64 = c.iter().zip(&hv).map(|(ci, hi)| ci.conj() * hi).sum();
                    prop_assert!((rq.re - sys.eigenvalues[j]).abs() <= RESIDUAL_TOL * scale);
                }
            }
        }
    }
}
