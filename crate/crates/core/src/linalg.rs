//! Dense Hermitian / real-symmetric eigensolvers.
//!
//! Fibre operators are complex Hermitian of moderate size (a few hundred), so
//! the classic route is used: Householder reduction to a real symmetric
//! tridiagonal, implicit-shift QL for eigenvalues, and either rotation
//! accumulation (full systems) or Sturm bisection + inverse iteration (a
//! single band branch). Finite sections are real symmetric and can reach a
//! few thousand rows; their tridiagonalization parallelizes over rows and
//! only eigenvalues are extracted.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative residual tolerance asserted on every fibre eigensolve.
pub const RESIDUAL_TOL: f64 = 1e-10;

const QL_MAX_SWEEPS: usize = 50;

// ---------------------------------------------------------------------------
// matrix containers
// ---------------------------------------------------------------------------

/// Dense complex matrix, row-major.
#[derive(Clone, Debug)]
pub struct CMatrix {
    pub n: usize,
    pub a: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            a: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.a[i * self.n + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self.at(i, j)).collect()
    }

    /// Max modulus of A - A^H, scaled by the max entry modulus.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let d = (self.at(i, j) - self.at(j, i).conj()).norm();
                defect = defect.max(d);
                scale = scale.max(self.at(i, j).norm());
            }
        }
        if scale > 0.0 {
            defect / scale
        } else {
            0.0
        }
    }

    /// Frobenius-scaled infinity norm estimate used for residual scaling.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let row = &self.a[i * n..(i + 1) * n];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// Dense real matrix, row-major.
#[derive(Clone, Debug)]
pub struct RMatrix {
    pub n: usize,
    pub a: Vec<f64>,
}

impl RMatrix {
    pub fn zeros(n: usize) -> Self {
        RMatrix {
            n,
            a: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.at(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a.iter().map(|x| x * x).sum()
    }
}

// ---------------------------------------------------------------------------
// Householder reflectors
// ---------------------------------------------------------------------------

/// Complex elementary reflector: maps (alpha, x) to (beta, 0) with beta real.
/// Returns (tau, beta) and overwrites x with the reflector tail v[1..] (v[0] = 1).
fn complex_larfg(alpha: Complex64, x: &mut [Complex64]) -> (Complex64, f64) {
    let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if xnorm == 0.0 && alpha.im == 0.0 {
        return (Complex64::new(0.0, 0.0), alpha.re);
    }
    let anorm = (alpha.norm_sqr() + xnorm * xnorm).sqrt();
    let beta = -anorm.copysign(if alpha.re != 0.0 { alpha.re } else { 1.0 });
    let tau = Complex64::new((beta - alpha.re) / beta, -alpha.im / beta);
    let scale = (alpha - beta).inv();
    for z in x.iter_mut() {
        *z *= scale;
    }
    (tau, beta)
}

/// Real elementary reflector; same conventions as the complex one.
fn real_larfg(alpha: f64, x: &mut [f64]) -> (f64, f64) {
    let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if xnorm == 0.0 {
        return (0.0, alpha);
    }
    let anorm = alpha.hypot(xnorm);
    let beta = -anorm.copysign(if alpha != 0.0 { alpha } else { 1.0 });
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    for v in x.iter_mut() {
        *v *= scale;
    }
    (tau, beta)
}

// ---------------------------------------------------------------------------
// complex Hermitian tridiagonalization
// ---------------------------------------------------------------------------

/// Householder reduction of a Hermitian matrix: A = Q T Q^H with T real
/// symmetric tridiagonal. Reflectors stay packed below the first subdiagonal.
pub struct HermTridiag {
    pub n: usize,
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    packed: CMatrix,
    taus: Vec<Complex64>,
}

pub fn hermitian_tridiagonalize(mut a: CMatrix) -> HermTridiag {
    let n = a.n;
    let mut taus = vec![Complex64::new(0.0, 0.0); n.saturating_sub(2)];
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];

    for k in 0..n.saturating_sub(2) {
        // reflector from the column below the diagonal
        let alpha = a.at(k + 1, k);
        let mut tail: Vec<Complex64> = (k + 2..n).map(|i| a.at(i, k)).collect();
        let (tau, beta) = complex_larfg(alpha, &mut tail);
        e[k] = beta;
        taus[k] = tau;
        // store v (v[0] = 1 implicit at row k+1)
        for (idx, i) in (k + 2..n).enumerate() {
            a.set(i, k, tail[idx]);
        }
        if tau.norm_sqr() == 0.0 {
            continue;
        }
        let m = n - (k + 1);
        let v: Vec<Complex64> = std::iter::once(Complex64::new(1.0, 0.0))
            .chain(tail.iter().copied())
            .collect();
        // p = tau * B v on the trailing block
        let mut p = vec![Complex64::new(0.0, 0.0); m];
        for i in 0..m {
            let mut s = Complex64::new(0.0, 0.0);
            let row = k + 1 + i;
            for j in 0..m {
                s += a.at(row, k + 1 + j) * v[j];
            }
            p[i] = tau * s;
        }
        let pv: Complex64 = p.iter().zip(&v).map(|(pi, vi)| pi.conj() * vi).sum();
        let s = 0.5 * tau * pv;
        let w: Vec<Complex64> = p.iter().zip(&v).map(|(pi, vi)| pi - s * vi).collect();
        // rank-2 Hermitian update B -= v w^H + w v^H
        for i in 0..m {
            let row = k + 1 + i;
            for j in 0..m {
                let upd = v[i] * w[j].conj() + w[i] * v[j].conj();
                let cur = a.at(row, k + 1 + j);
                a.set(row, k + 1 + j, cur - upd);
            }
        }
    }
    if n >= 2 {
        // the last subdiagonal entry may still be complex; fold its phase
        // into the final basis vector so T stays real
        let z = a.at(n - 1, n - 2);
        e[n - 2] = z.norm();
        let phase = if z.norm() > 0.0 {
            z / z.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        a.set(n - 1, n - 2, phase);
    }
    for i in 0..n {
        d[i] = a.at(i, i).re;
    }
    HermTridiag {
        n,
        d,
        e,
        packed: a,
        taus,
    }
}

impl HermTridiag {
    /// Back-transform a tridiagonal-space vector to the original basis.
    pub fn apply_q(&self, w: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let mut u: Vec<Complex64> = w.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        if n >= 2 {
            let phase = self.packed.at(n - 1, n - 2);
            u[n - 1] *= phase;
        }
        for k in (0..n.saturating_sub(2)).rev() {
            let tau = self.taus[k];
            if tau.norm_sqr() == 0.0 {
                continue;
            }
            // v = (1, packed[k+2.., k])
            let mut dot = u[k + 1];
            for i in k + 2..n {
                dot += self.packed.at(i, k).conj() * u[i];
            }
            let f = tau * dot;
            u[k + 1] -= f;
            for i in k + 2..n {
                let vi = self.packed.at(i, k);
                u[i] -= f * vi;
            }
        }
        u
    }

    pub fn scale(&self) -> f64 {
        let dmax = self.d.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let emax = self.e.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        (dmax + 2.0 * emax).max(f64::MIN_POSITIVE)
    }
}

// ---------------------------------------------------------------------------
// implicit-shift QL on a real symmetric tridiagonal
// ---------------------------------------------------------------------------

/// Eigenvalues of (d, e); when `z` is given its columns are rotated along,
/// mapping the identity to the tridiagonal eigenvector matrix.
pub fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut RMatrix>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let mut ee = vec![0.0; n];
    ee[..n - 1].copy_from_slice(&e[..n - 1]);
    // absolute deflation floor: off-diagonals this small relative to the
    // matrix scale cannot move any eigenvalue beyond roundoff
    let scale = d.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
        + 2.0 * ee.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let floor = f64::EPSILON * scale.max(f64::MIN_POSITIVE);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if ee[m].abs() <= f64::EPSILON * dd || ee[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_SWEEPS {
                return Err(Error::EigenNoConvergence {
                    residual: ee[l].abs(),
                    iterations: iter,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * ee[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + ee[l] / (g + r.copysign(if g != 0.0 { g } else { 1.0 }));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * ee[i];
                let b = c * ee[i];
                r = f.hypot(g);
                ee[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    ee[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zm) = z.as_deref_mut() {
                    let nn = zm.n;
                    for k in 0..nn {
                        let f = zm.a[k * nn + i + 1];
                        zm.a[k * nn + i + 1] = s * zm.a[k * nn + i] + c * f;
                        zm.a[k * nn + i] = c * zm.a[k * nn + i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            ee[l] = g;
            ee[m] = 0.0;
        }
    }
    Ok(())
}

/// Ascending eigenvalues of a real symmetric tridiagonal.
pub fn tridiag_eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let mut dd = d.to_vec();
    let mut ee = e.to_vec();
    tql(&mut dd, &mut ee, None)?;
    dd.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(dd)
}

/// Number of eigenvalues strictly below `x` (Sturm / LDL^T pivot count).
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let n = d.len();
    if n == 0 {
        return 0;
    }
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if q.abs() < 1e-300 {
            1e-300f64.copysign(if q >= 0.0 { 1.0 } else { -1.0 })
        } else {
            q
        };
        q = (d[i] - x) - e[i - 1] * e[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `index`-th (0-based, ascending) eigenvalue via Sturm bisection.
pub fn tridiag_eigenvalue_at(d: &[f64], e: &[f64], index: usize) -> f64 {
    let n = d.len();
    assert!(index < n);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = (if i > 0 { e[i - 1].abs() } else { 0.0 })
            + (if i + 1 < n { e[i].abs() } else { 0.0 });
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let tol = 4.0 * f64::EPSILON * scale;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) <= index {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse iteration for the eigenvector of (d, e) at eigenvalue `lambda`.
/// `orth` holds already-computed vectors of the same cluster to project out.
pub fn tridiag_eigenvector(d: &[f64], e: &[f64], lambda: f64, seed: u64, orth: &[Vec<f64>]) -> Vec<f64> {
    let n = d.len();
    // deterministic start vector
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        })
        .collect();
    normalize(&mut v);
    for _ in 0..3 {
        solve_shifted_tridiag(d, e, lambda, &mut v);
        for o in orth {
            let dot: f64 = v.iter().zip(o).map(|(a, b)| a * b).sum();
            for (vi, oi) in v.iter_mut().zip(o) {
                *vi -= dot * oi;
            }
        }
        normalize(&mut v);
    }
    v
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    } else {
        v[0] = 1.0;
    }
}

/// Solve (T - lambda) y = rhs in place; tridiagonal LU with partial pivoting.
fn solve_shifted_tridiag(d: &[f64], e: &[f64], lambda: f64, rhs: &mut [f64]) {
    let n = d.len();
    if n == 1 {
        rhs[0] = 1.0;
        return;
    }
    let scale = d.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
        + e.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let tiny = f64::EPSILON * scale.max(1.0);
    // bands: sub a_i = e[i-1], diag b_i = d[i]-lambda, sup c_i = e[i]; pivoting fills c2
    let mut b: Vec<f64> = d.iter().map(|&x| x - lambda).collect();
    let mut c: Vec<f64> = (0..n - 1).map(|i| e[i]).collect();
    let mut c2 = vec![0.0; n];
    let mut low = vec![0.0; n - 1];
    let mut swapped = vec![false; n - 1];
    for i in 0..n - 1 {
        let sub = e[i];
        if sub.abs() > b[i].abs() {
            swapped[i] = true;
            // swap row i and i+1
            let (bi, ci) = (b[i], c[i]);
            b[i] = sub;
            c[i] = b[i + 1];
            c2[i] = if i + 1 < n - 1 { c[i + 1] } else { 0.0 };
            b[i + 1] = ci - (bi / b[i]) * c[i];
            if i + 1 < n - 1 {
                c[i + 1] = -(bi / b[i]) * c2[i];
            }
            low[i] = bi / b[i];
            rhs.swap(i, i + 1);
            rhs[i + 1] -= low[i] * rhs[i];
        } else {
            let piv = if b[i].abs() < tiny {
                tiny.copysign(if b[i] >= 0.0 { 1.0 } else { -1.0 })
            } else {
                b[i]
            };
            b[i] = piv;
            low[i] = sub / piv;
            b[i + 1] -= low[i] * c[i];
            rhs[i + 1] -= low[i] * rhs[i];
        }
    }
    if b[n - 1].abs() < tiny {
        b[n - 1] = tiny.copysign(if b[n - 1] >= 0.0 { 1.0 } else { -1.0 });
    }
    // back substitution
    rhs[n - 1] /= b[n - 1];
    if n >= 2 {
        rhs[n - 2] = (rhs[n - 2] - c[n - 2] * rhs[n - 1]) / b[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - c[i] * rhs[i + 1] - c2[i] * rhs[i + 2]) / b[i];
    }
    let norm = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in rhs.iter_mut() {
            *x /= norm;
        }
    }
}

// ---------------------------------------------------------------------------
// high-level Hermitian drivers
// ---------------------------------------------------------------------------

/// Full eigensystem of a Hermitian matrix: ascending eigenvalues and
/// orthonormal eigenvector columns.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = a.n;
    let trid = hermitian_tridiagonalize(a.clone());
    let mut d = trid.d.clone();
    let mut e = trid.e.clone();
    let mut z = RMatrix::zeros(n);
    for i in 0..n {
        z.set(i, i, 1.0);
    }
    tql(&mut d, &mut e, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        let w: Vec<f64> = (0..n).map(|i| z.at(i, src)).collect();
        let u = trid.apply_q(&w);
        for i in 0..n {
            vectors.set(i, col, u[i]);
        }
    }
    Ok((values, vectors))
}

/// Single eigenpair (ascending index, 0-based) of a Hermitian matrix.
/// Cheaper than the full solve when only one band branch is needed.
pub fn hermitian_eigen_branch(a: &CMatrix, index: usize) -> Result<(f64, Vec<Complex64>)> {
    let n = a.n;
    if index >= n {
        return Err(Error::BandIndexOutOfRange {
            j: index + 1,
            max: n,
        });
    }
    let trid = hermitian_tridiagonalize(a.clone());
    let lambda = tridiag_eigenvalue_at(&trid.d, &trid.e, index);
    // resolve the cluster around this eigenvalue so inverse iteration can
    // orthogonalize within near-degenerate groups
    let scale = trid.scale();
    let cluster_tol = 1e-8 * scale;
    let mut lo = index;
    while lo > 0 {
        let prev = tridiag_eigenvalue_at(&trid.d, &trid.e, lo - 1);
        if (lambda - prev).abs() <= cluster_tol {
            lo -= 1;
        } else {
            break;
        }
    }
    let mut orth: Vec<Vec<f64>> = Vec::new();
    for idx in lo..index {
        let lam = tridiag_eigenvalue_at(&trid.d, &trid.e, idx);
        let w = tridiag_eigenvector(&trid.d, &trid.e, lam, idx as u64 + 1, &orth);
        orth.push(w);
    }
    let w = tridiag_eigenvector(&trid.d, &trid.e, lambda, index as u64 + 1, &orth);
    let u = trid.apply_q(&w);
    Ok((lambda, u))
}

/// Ascending eigenvalues only.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    let trid = hermitian_tridiagonalize(a.clone());
    tridiag_eigenvalues(&trid.d, &trid.e)
}

/// A single eigenvalue (ascending index, 0-based) without its vector.
pub fn hermitian_eigenvalue_at(a: &CMatrix, index: usize) -> Result<f64> {
    if index >= a.n {
        return Err(Error::BandIndexOutOfRange {
            j: index + 1,
            max: a.n,
        });
    }
    let trid = hermitian_tridiagonalize(a.clone());
    Ok(tridiag_eigenvalue_at(&trid.d, &trid.e, index))
}

// ---------------------------------------------------------------------------
// real symmetric path (finite sections)
// ---------------------------------------------------------------------------

/// Householder tridiagonalization of a real symmetric matrix, destructive.
/// Row updates run in parallel; only (d, e) are kept.
pub fn sym_tridiagonalize(a: &mut RMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.n;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        let alpha = a.at(k + 1, k);
        let mut tail: Vec<f64> = (k + 2..n).map(|i| a.at(i, k)).collect();
        let (tau, beta) = real_larfg(alpha, &mut tail);
        e[k] = beta;
        if tau == 0.0 {
            continue;
        }
        let m = n - (k + 1);
        v[0] = 1.0;
        v[1..m].copy_from_slice(&tail);
        // p = tau * B v over the trailing block, parallel over rows
        let base = k + 1;
        {
            let av = &a.a;
            let vs = &v[..m];
            p[..m]
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, pi)| {
                    let row = &av[(base + i) * n + base..(base + i) * n + n];
                    let mut s = 0.0;
                    for j in 0..m {
                        s += row[j] * vs[j];
                    }
                    *pi = tau * s;
                });
        }
        let pv: f64 = p[..m].iter().zip(&v[..m]).map(|(x, y)| x * y).sum();
        let s = 0.5 * tau * pv;
        for i in 0..m {
            p[i] -= s * v[i];
        }
        // rank-2 update B -= v w^T + w v^T, parallel over rows
        {
            let vs = &v[..m];
            let ws = &p[..m];
            a.a[(base) * n..]
                .par_chunks_mut(n)
                .take(m)
                .enumerate()
                .for_each(|(i, row)| {
                    let vi = vs[i];
                    let wi = ws[i];
                    let r = &mut row[base..n];
                    for j in 0..m {
                        r[j] -= vi * ws[j] + wi * vs[j];
                    }
                });
        }
    }
    if n >= 2 {
        e[n - 2] = a.at(n - 1, n - 2);
    }
    for i in 0..n {
        d[i] = a.at(i, i);
    }
    (d, e)
}

/// Ascending eigenvalues of a real symmetric matrix (destructive).
pub fn sym_eigenvalues(a: &mut RMatrix) -> Result<Vec<f64>> {
    let (d, e) = sym_tridiagonalize(a);
    tridiag_eigenvalues(&d, &e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut state = seed;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let z = if i == j {
                    Complex64::new(next(), 0.0)
                } else {
                    Complex64::new(next(), next())
                };
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        m
    }

    #[test]
    fn hermitian_eigen_residuals_and_orthonormality() {
        let n = 40;
        let a = random_hermitian(n, 7);
        let (vals, vecs) = hermitian_eigen(&a).unwrap();
        let scale = a.norm_inf();
        for j in 0..n {
            assert!(j == 0 || vals[j] >= vals[j - 1]);
            let c = vecs.column(j);
            let hv = a.matvec(&c);
            let res: f64 = hv
                .iter()
                .zip(&c)
                .map(|(h, v)| (h - vals[j] * v).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-11 * scale, "residual {res} at column {j}");
        }
        // orthonormal columns
        for i in 0..n {
            for j in i..n {
                let dot: Complex64 = (0..n)
                    .map(|r| vecs.at(r, i).conj() * vecs.at(r, j))
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((dot.norm() - target).abs() < 1e-10);
            }
        }
        // trace identities against the eigenvalue sum
        let tr: f64 = (0..n).map(|i| a.at(i, i).re).sum();
        let sum: f64 = vals.iter().sum();
        assert!((tr - sum).abs() < 1e-10 * scale.max(1.0) * n as f64);
    }

    #[test]
    fn branch_solver_matches_full_solver() {
        let a = random_hermitian(30, 99);
        let (vals, vecs) = hermitian_eigen(&a).unwrap();
        for idx in [0usize, 7, 15, 29] {
            let (lam, u) = hermitian_eigen_branch(&a, idx).unwrap();
            assert!((lam - vals[idx]).abs() < 1e-10 * a.norm_inf());
            let overlap: Complex64 = (0..30).map(|r| vecs.at(r, idx).conj() * u[r]).sum();
            assert!((overlap.norm() - 1.0).abs() < 1e-8, "overlap {}", overlap.norm());
        }
    }

    #[test]
    fn branch_solver_handles_degenerate_diagonal() {
        // diagonal with exact double eigenvalues, as in the free fibre at k = 1/2
        let n = 6;
        let mut a = CMatrix::zeros(n);
        for (i, val) in [0.25, 0.25, 2.25, 2.25, 6.25, 6.25].iter().enumerate() {
            a.set(i, i, Complex64::new(*val, 0.0));
        }
        let (l0, u0) = hermitian_eigen_branch(&a, 0).unwrap();
        let (l1, u1) = hermitian_eigen_branch(&a, 1).unwrap();
        assert!((l0 - 0.25).abs() < 1e-12 && (l1 - 0.25).abs() < 1e-12);
        let dot: Complex64 = u0.iter().zip(&u1).map(|(x, y)| x.conj() * y).sum();
        assert!(dot.norm() < 1e-8, "degenerate pair not orthogonal: {}", dot.norm());
    }

    #[test]
    fn real_symmetric_eigenvalues_match_tight_binding_chain() {
        // d_i = 0, e_i = -1: eigenvalues -2 cos(k pi / (n+1))
        let n = 60;
        let mut m = RMatrix::zeros(n);
        for i in 0..n - 1 {
            m.set(i, i + 1, -1.0);
            m.set(i + 1, i, -1.0);
        }
        let tr = m.trace();
        let fr = m.frobenius_sq();
        let vals = sym_eigenvalues(&mut m).unwrap();
        for (idx, lam) in vals.iter().enumerate() {
            let exact = -2.0 * ((idx + 1) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((lam - exact).abs() < 1e-10, "{idx}: {lam} vs {exact}");
        }
        assert!((vals.iter().sum::<f64>() - tr).abs() < 1e-9);
        assert!((vals.iter().map(|x| x * x).sum::<f64>() - fr).abs() < 1e-8);
    }

    #[test]
    fn sturm_bisection_agrees_with_ql() {
        let d = vec![0.3, -1.2, 2.0, 0.9, -0.4, 1.1];
        let e = vec![0.5, -0.7, 0.2, 0.9, -0.3];
        let vals = tridiag_eigenvalues(&d, &e).unwrap();
        for (i, v) in vals.iter().enumerate() {
            let b = tridiag_eigenvalue_at(&d, &e, i);
            assert!((b - v).abs() < 1e-12, "{i}: {b} vs {v}");
        }
    }
}
