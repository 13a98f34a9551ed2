//! Small dense complex linear algebra.
//!
//! Every matrix-valued quantity in the crate (kernels, normalizers,
//! characteristic functions, certificates) is a [`CMatrix`] of dimension
//! at most four. Hermitian eigenproblems are solved with cyclic Jacobi
//! rotations; larger Hermitian Gram matrices share the same solver through
//! [`hermitian_eigen_dense`].

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;
const HERMITIAN_TOL: f64 = 1e-10;
const INVERSE_GUARD: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense `n x n` complex matrix, `1 <= n <= 4`, stored row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: [Complex64; MAX_DIM * MAX_DIM],
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "matrix dimension {n} out of range");
        Self {
            n,
            data: [ZERO; MAX_DIM * MAX_DIM],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// 1x1 matrix.
    pub fn scalar(c: Complex64) -> Self {
        let mut m = Self::zeros(1);
        m[(0, 0)] = c;
        m
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn diag_real(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(e, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if !(1..=MAX_DIM).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::InvalidInput(format!("non-finite entry at ({i}, {j})")));
                }
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)]).collect())
            .collect()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_finite(&self) -> bool {
        self.entries().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    fn entries(&self) -> impl Iterator<Item = &Complex64> {
        self.data[..MAX_DIM * self.n].iter().enumerate().filter_map(|(k, c)| {
            if k % MAX_DIM < self.n {
                Some(c)
            } else {
                None
            }
        })
    }

    pub fn mat_mul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn scale(&self, c: Complex64) -> CMatrix {
        CMatrix::from_fn(self.n, |i, j| self[(i, j)] * c)
    }

    pub fn scale_real(&self, c: f64) -> CMatrix {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Hermitian part `(A + A*) / 2`.
    pub fn hermitian_part(&self) -> CMatrix {
        (*self + self.adjoint()).scale_real(0.5)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let gram = (self.adjoint() * *self).hermitian_part();
        let (values, _) = jacobi_hermitian(self.n, gram.dense());
        values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }

    /// Singular values in ascending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let gram = (self.adjoint() * *self).hermitian_part();
        let (values, _) = jacobi_hermitian(self.n, gram.dense());
        values.into_iter().map(|v| v.max(0.0).sqrt()).collect()
    }

    /// True iff `||A*A - I||_F <= tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self - CMatrix::identity(self.n)).frobenius_norm()
    }

    /// Inverse by Gaussian elimination with partial pivoting.
    ///
    /// Fails with [`Error::SingularMatrix`] when the 2-norm condition number
    /// exceeds `1e12`.
    pub fn inverse(&self) -> Result<CMatrix> {
        let n = self.n;
        let inv = solve_dense(n, self.dense(), identity_dense(n), n);
        let Some(inv) = inv else {
            return Err(Error::SingularMatrix { cond: f64::INFINITY });
        };
        let inv = CMatrix::from_dense(n, &inv);
        let cond = self.operator_norm() * inv.operator_norm();
        if !cond.is_finite() || cond * INVERSE_GUARD > 1.0 {
            return Err(Error::SingularMatrix { cond });
        }
        Ok(inv)
    }

    /// Condition number `sigma_max / sigma_min` (infinite when singular).
    pub fn condition_number(&self) -> f64 {
        match solve_dense(self.n, self.dense(), identity_dense(self.n), self.n) {
            Some(inv) => self.operator_norm() * CMatrix::from_dense(self.n, &inv).operator_norm(),
            None => f64::INFINITY,
        }
    }

    pub fn hermitian_defect(&self) -> f64 {
        (*self - self.adjoint()).frobenius_norm()
    }

    /// Eigen-decomposition of a Hermitian matrix: `A = U diag(values) U*`,
    /// eigenvalues ascending.
    pub fn hermitian_eigen(&self) -> Result<HermitianEigen> {
        let norm = self.frobenius_norm();
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOL * norm {
            return Err(Error::NotHermitian {
                defect: defect / norm.max(f64::MIN_POSITIVE),
            });
        }
        let h = self.hermitian_part();
        let (values, vectors) = jacobi_hermitian(self.n, h.dense());
        Ok(HermitianEigen {
            values,
            vectors: CMatrix::from_dense(self.n, &vectors),
        })
    }

    /// Principal square root (or inverse square root) of a Hermitian PSD matrix.
    pub fn psd_sqrt(&self, inverse: bool) -> Result<CMatrix> {
        let eig = self.hermitian_eigen()?;
        let scale = eig
            .values
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let min = eig.values.first().copied().unwrap_or(0.0);
        if min < -PSD_TOL * scale {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        if inverse && (scale == 0.0 || min < PSD_TOL * scale) {
            return Err(Error::NearSingular { min_eigenvalue: min });
        }
        let roots: Vec<f64> = eig
            .values
            .iter()
            .map(|&v| {
                let r = v.max(0.0).sqrt();
                if inverse {
                    1.0 / r
                } else {
                    r
                }
            })
            .collect();
        let u = eig.vectors;
        Ok((u * CMatrix::diag_real(&roots) * u.adjoint()).hermitian_part())
    }

    /// Closest unitary matrix in Frobenius norm, `M (M*M)^{-1/2}`.
    pub fn nearest_unitary(&self) -> Result<CMatrix> {
        let gram = (self.adjoint() * *self).hermitian_part();
        Ok(*self * gram.psd_sqrt(true)?)
    }

    /// Eigenpairs of a general (non-Hermitian) matrix with simple spectrum.
    ///
    /// Eigenvalues come from the characteristic polynomial, eigenvectors from
    /// the null space of `A - lambda I`; columns of the returned matrix have
    /// unit length. Fails with [`Error::DegenerateSpectrum`] when two
    /// eigenvalues are closer than `gap_tol` relative to the spectral scale.
    pub fn general_eigen(&self, gap_tol: f64) -> Result<(Vec<Complex64>, CMatrix)> {
        let n = self.n;
        let scale = self.frobenius_norm();
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::DegenerateSpectrum);
        }
        let a = self.scale_real(1.0 / scale);
        let coeffs = characteristic_polynomial(&a);
        let mut roots = polynomial_roots(&coeffs);
        for r in roots.iter_mut() {
            *r = polish_root(&coeffs, *r);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (roots[i] - roots[j]).norm() < gap_tol * roots.iter().fold(1.0_f64, |m, r| m.max(r.norm())) {
                    return Err(Error::DegenerateSpectrum);
                }
            }
        }
        let mut vectors = CMatrix::zeros(n);
        for (k, &lambda) in roots.iter().enumerate() {
            let shifted = a - CMatrix::identity(n).scale(lambda);
            let gram = (shifted.adjoint() * shifted).hermitian_part();
            let (_, u) = jacobi_hermitian(n, gram.dense());
            // column 0 belongs to the smallest eigenvalue
            let mut v: Vec<Complex64> = (0..n).map(|i| u[i * n]).collect();
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            for c in v.iter_mut() {
                *c /= norm;
            }
            for i in 0..n {
                vectors[(i, k)] = v[i];
            }
        }
        let values = roots.into_iter().map(|r| r * scale).collect();
        Ok((values, vectors))
    }

    pub(crate) fn dense(&self) -> Vec<Complex64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub(crate) fn from_dense(n: usize, dense: &[Complex64]) -> CMatrix {
        CMatrix::from_fn(n, |i, j| dense[i * n + j])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.n && j < self.n);
        &self.data[i * MAX_DIM + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.n && j < self.n);
        &mut self.data[i * MAX_DIM + j]
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix product");
        self.mul_unchecked(&rhs)
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix sum");
        CMatrix::from_fn(self.n, |i, j| self[(i, j)] + rhs[(i, j)])
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix difference");
        CMatrix::from_fn(self.n, |i, j| self[(i, j)] - rhs[(i, j)])
    }
}

impl Neg for CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column `k` pairs with `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> CMatrix {
        self.vectors * CMatrix::diag_real(&self.values) * self.vectors.adjoint()
    }
}

/// Hermitian eigen-decomposition of a dense row-major `n x n` matrix of any
/// size. Returns ascending eigenvalues and the row-major eigenvector matrix.
pub fn hermitian_eigen_dense(n: usize, a: &[Complex64]) -> Result<(Vec<f64>, Vec<Complex64>)> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            left: n * n,
            right: a.len(),
        });
    }
    let norm = a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut defect = 0.0;
    for i in 0..n {
        for j in 0..n {
            defect += (a[i * n + j] - a[j * n + i].conj()).norm_sqr();
        }
    }
    if defect.sqrt() > HERMITIAN_TOL * norm {
        return Err(Error::NotHermitian {
            defect: defect.sqrt() / norm.max(f64::MIN_POSITIVE),
        });
    }
    let mut h = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = (a[i * n + j] + a[j * n + i].conj()) * 0.5;
        }
    }
    Ok(jacobi_hermitian(n, h))
}

/// Cyclic complex Jacobi. Input must already be exactly Hermitian.
fn jacobi_hermitian(n: usize, mut a: Vec<Complex64>) -> (Vec<f64>, Vec<Complex64>) {
    let mut u = identity_dense(n);
    let norm = a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off < JACOBI_TOL * norm {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(n, &mut a, &mut u, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let values = order.iter().map(|&k| a[k * n + k].re).collect();
    let mut vectors = vec![ZERO; n * n];
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + col] = u[row * n + k];
        }
    }
    (values, vectors)
}

fn rotate(n: usize, a: &mut [Complex64], u: &mut [Complex64], p: usize, q: usize) {
    let apq = a[p * n + q];
    let abs = apq.norm();
    if abs == 0.0 {
        return;
    }
    let phase = apq / abs;
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let tau = (aqq - app) / (2.0 * abs);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // J = diag phase on q, then a real rotation in the (p, q) plane.
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = phase.conj() * (-s);
    let jqq = phase.conj() * c;

    // A <- A J
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = akp * jpp + akq * jqp;
        a[k * n + q] = akp * jpq + akq * jqq;
    }
    // A <- J* A
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = jpp.conj() * apk + jqp.conj() * aqk;
        a[q * n + k] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[p * n + q] = ZERO;
    a[q * n + p] = ZERO;
    a[p * n + p].im = 0.0;
    a[q * n + q].im = 0.0;
    // U <- U J
    for k in 0..n {
        let ukp = u[k * n + p];
        let ukq = u[k * n + q];
        u[k * n + p] = ukp * jpp + ukq * jqp;
        u[k * n + q] = ukp * jpq + ukq * jqq;
    }
}

fn identity_dense(n: usize) -> Vec<Complex64> {
    let mut m = vec![ZERO; n * n];
    for i in 0..n {
        m[i * n + i] = ONE;
    }
    m
}

/// Solves `A X = B` for row-major `A` (`n x n`) and `B` (`n x nrhs`) by
/// Gaussian elimination with partial pivoting. `None` on an exact zero pivot.
pub(crate) fn solve_dense(
    n: usize,
    mut a: Vec<Complex64>,
    mut b: Vec<Complex64>,
    nrhs: usize,
) -> Option<Vec<Complex64>> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .unwrap();
        if a[pivot * n + col].norm() == 0.0 || !a[pivot * n + col].norm().is_finite() {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            for k in 0..nrhs {
                b.swap(col * nrhs + k, pivot * nrhs + k);
            }
        }
        let d = a[col * n + col];
        for row in (col + 1)..n {
            let f = a[row * n + col] / d;
            if f == ZERO {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] -= f * v;
            }
            for k in 0..nrhs {
                let v = b[col * nrhs + k];
                b[row * nrhs + k] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let d = a[col * n + col];
        for k in 0..nrhs {
            let mut acc = b[col * nrhs + k];
            for j in (col + 1)..n {
                acc -= a[col * n + j] * b[j * nrhs + k];
            }
            b[col * nrhs + k] = acc / d;
        }
    }
    Some(b)
}

/// Coefficients `c[0..=n]` of `det(lambda I - A)` (Faddeev-LeVerrier),
/// `c[n] = 1`.
fn characteristic_polynomial(a: &CMatrix) -> Vec<Complex64> {
    let n = a.n();
    let mut coeffs = vec![ZERO; n + 1];
    coeffs[n] = ONE;
    let mut m = CMatrix::zeros(n);
    for k in 1..=n {
        m = *a * m + CMatrix::identity(n).scale(coeffs[n - k + 1]);
        coeffs[n - k] = -(*a * m).trace() / (k as f64);
    }
    coeffs
}

fn eval_poly(coeffs: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Durand-Kerner iteration for a monic polynomial.
fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    if n == 1 {
        return vec![-coeffs[0]];
    }
    let radius = 1.0 + coeffs[..n].iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius * 0.5).collect();
    for _ in 0..1000 {
        let mut delta = 0.0_f64;
        for i in 0..n {
            let (p, _) = eval_poly(coeffs, roots[i]);
            let mut denom = ONE;
            for j in 0..n {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom == ZERO {
                denom = Complex64::new(1e-300, 0.0);
            }
            let step = p / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-16 * radius {
            break;
        }
    }
    roots
}

fn polish_root(coeffs: &[Complex64], mut x: Complex64) -> Complex64 {
    for _ in 0..3 {
        let (p, dp) = eval_poly(coeffs, x);
        if dp == ZERO {
            break;
        }
        let step = p / dp;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        x -= step;
    }
    x
}

/// Outcome of a Gram positivity check.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GramVerdict {
    pub min_eigenvalue: f64,
    pub norm: f64,
    pub passed: bool,
}

/// Builds the block Gram matrix `G[j][k] = K_{p_k}(p_j)` and checks that its
/// smallest eigenvalue is at least `-tol * ||G||`.
pub fn gram_psd_check<F>(points: &[Complex64], mut kernel: F, tol: f64) -> Result<GramVerdict>
where
    F: FnMut(Complex64, Complex64) -> Result<CMatrix>,
{
    if points.is_empty() {
        return Err(Error::InvalidInput("Gram check needs at least one point".into()));
    }
    let first = kernel(points[0], points[0])?;
    let d = first.n();
    let size = d * points.len();
    let mut g = vec![ZERO; size * size];
    for (j, &pj) in points.iter().enumerate() {
        for (k, &pk) in points.iter().enumerate() {
            let block = if j == 0 && k == 0 {
                first
            } else {
                kernel(pk, pj).map_err(|e| e.at(pk, pj))?
            };
            if block.n() != d {
                return Err(Error::DimensionMismatch {
                    left: d,
                    right: block.n(),
                });
            }
            for r in 0..d {
                for c in 0..d {
                    g[(j * d + r) * size + k * d + c] = block[(r, c)];
                }
            }
        }
    }
    let (values, _) = hermitian_eigen_dense(size, &g)?;
    let norm = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min_eigenvalue = values[0];
    Ok(GramVerdict {
        min_eigenvalue,
        norm,
        passed: min_eigenvalue >= -tol * norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (*a - *b).frobenius_norm() <= tol
    }

    fn matrix_strategy(n: usize) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
            .prop_map(move |v| CMatrix::from_fn(n, |i, j| c(v[i * n + j].0, v[i * n + j].1)))
    }

    fn sized_matrix() -> impl Strategy<Value = CMatrix> {
        (1usize..=4).prop_flat_map(matrix_strategy)
    }

    fn random_unitary(m: &CMatrix) -> CMatrix {
        // nearest unitary of a generic matrix
        (*m + CMatrix::identity(m.n()).scale_real(0.1)).nearest_unitary().unwrap()
    }

    #[test]
    fn products_of_simple_matrices() {
        let i2 = CMatrix::identity(2);
        assert!(close(&i2.mat_mul(&i2).unwrap(), &i2, 0.0));
        let d = CMatrix::diag_real(&[2.0, 3.0]).mat_mul(&CMatrix::diag_real(&[5.0, 7.0])).unwrap();
        assert!(close(&d, &CMatrix::diag_real(&[10.0, 21.0]), 0.0));
        let nil = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(nil.mat_mul(&nil).unwrap().frobenius_norm(), 0.0);
        assert!(matches!(
            i2.mat_mul(&CMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn adjoint_conjugates_scalars() {
        assert!(close(&CMatrix::identity(3).adjoint(), &CMatrix::identity(3), 0.0));
        let m = CMatrix::scalar(c(0.0, 1.0)).adjoint();
        assert_eq!(m[(0, 0)], c(0.0, -1.0));
    }

    #[test]
    fn inverse_of_diagonal() {
        assert!(close(&CMatrix::identity(4).inverse().unwrap(), &CMatrix::identity(4), 1e-15));
        let inv = CMatrix::diag(&[c(2.0, 0.0), c(0.0, 4.0)]).inverse().unwrap();
        assert!(close(&inv, &CMatrix::diag(&[c(0.5, 0.0), c(0.0, -0.25)]), 1e-15));
    }

    #[test]
    fn inverse_rejects_singular_matrices() {
        let m = CMatrix::from_real_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(m.inverse(), Err(Error::SingularMatrix { .. })));
        let m = CMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 1e-14]]).unwrap();
        match m.inverse() {
            Err(Error::SingularMatrix { cond }) => assert!(cond > 1e12),
            other => panic!("expected SingularMatrix, got {other:?}"),
        }
    }

    #[test]
    fn eigen_of_classical_examples() {
        let e = CMatrix::identity(3).hermitian_eigen().unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let m = CMatrix::from_real_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = m.hermitian_eigen().unwrap();
        assert_relative_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(e.values[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let m = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(m.hermitian_eigen(), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn psd_sqrt_of_diagonal() {
        let s = CMatrix::diag_real(&[4.0, 9.0]).psd_sqrt(false).unwrap();
        assert!(close(&s, &CMatrix::diag_real(&[2.0, 3.0]), 1e-14));
        let s = CMatrix::identity(2).psd_sqrt(true).unwrap();
        assert!(close(&s, &CMatrix::identity(2), 1e-14));
    }

    #[test]
    fn psd_sqrt_errors() {
        let m = CMatrix::diag_real(&[1.0, -1.0]);
        assert!(matches!(m.psd_sqrt(false), Err(Error::NotPsd { .. })));
        let m = CMatrix::diag_real(&[1.0, 0.0]);
        assert!(m.psd_sqrt(false).is_ok());
        assert!(matches!(m.psd_sqrt(true), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn operator_norm_examples() {
        assert_relative_eq!(CMatrix::identity(2).operator_norm(), 1.0, epsilon = 1e-15);
        let j = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_relative_eq!(j.operator_norm(), 1.0, epsilon = 1e-15);
        let d = CMatrix::diag(&[c(0.3, 0.0), c(0.0, 0.9)]);
        assert_relative_eq!(d.operator_norm(), 0.9, epsilon = 1e-15);
    }

    #[test]
    fn unitary_examples() {
        assert!(CMatrix::identity(2).is_unitary(1e-10));
        let phase = Complex64::from_polar(1.0, std::f64::consts::PI / 3.0);
        assert!(CMatrix::diag(&[phase, c(-1.0, 0.0)]).is_unitary(1e-10));
        assert!(!CMatrix::identity(2).scale_real(0.5).is_unitary(1e-10));
    }

    #[test]
    fn general_eigen_recovers_pairs() {
        let m = CMatrix::from_rows(&[
            vec![c(1.0, 0.5), c(0.3, 0.0), c(0.0, 0.2)],
            vec![c(0.0, 0.0), c(-0.4, 1.0), c(0.7, 0.0)],
            vec![c(0.2, -0.1), c(0.0, 0.0), c(2.0, 0.0)],
        ])
        .unwrap();
        let (values, vectors) = m.general_eigen(1e-8).unwrap();
        for k in 0..3 {
            let v = CMatrix::from_fn(3, |i, j| if j == 0 { vectors[(i, k)] } else { ZERO });
            let residual = (m * v - v.scale(values[k])).frobenius_norm();
            assert!(residual < 1e-12, "residual {residual}");
        }
        assert!(matches!(
            CMatrix::identity(2).general_eigen(1e-8),
            Err(Error::DegenerateSpectrum)
        ));
    }

    #[test]
    fn gram_of_repeated_point_is_rank_deficient() {
        let p = c(0.3, 1.0);
        let kernel = |l: Complex64, z: Complex64| Ok(CMatrix::scalar(Complex64::new(1.0, 0.0) / (z - l.conj())));
        let v = gram_psd_check(&[p, p], |l, z| kernel(l, z).map(|m| m.scale(c(0.0, 1.0))), 1e-12).unwrap();
        assert!(v.passed);
        assert!(v.min_eigenvalue.abs() < 1e-12 * v.norm);
    }

    proptest! {
        #[test]
        fn eigen_reconstructs_hermitian(m in sized_matrix()) {
            let h = m.hermitian_part();
            let e = h.hermitian_eigen().unwrap();
            prop_assert!((e.reconstruct() - h).frobenius_norm() <= 1e-10 * h.frobenius_norm().max(1e-300));
            prop_assert!(e.vectors.is_unitary(1e-10));
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn sqrt_squares_back(m in sized_matrix()) {
            let a = m.adjoint() * m;
            let s = a.psd_sqrt(false).unwrap();
            prop_assert!((s * s - a).frobenius_norm() <= 1e-10 * a.frobenius_norm().max(1e-300));
        }

        #[test]
        fn inverse_residual(m in sized_matrix()) {
            let a = m + CMatrix::identity(m.n()).scale_real(3.0);
            let inv = a.inverse().unwrap();
            prop_assert!((inv * a - CMatrix::identity(a.n())).frobenius_norm() <= 1e-10);
            let cond = a.condition_number();
            prop_assert!((inv.inverse().unwrap() - a).frobenius_norm() <= 1e-8 * cond * cond);
        }

        #[test]
        fn norm_is_unitarily_invariant((m, u, w) in (1usize..=4).prop_flat_map(|n| (matrix_strategy(n), matrix_strategy(n), matrix_strategy(n)))) {
            let u = random_unitary(&u);
            let w = random_unitary(&w);
            prop_assert!(u.is_unitary(1e-10));
            prop_assert!((( u * m * w).operator_norm() - m.operator_norm()).abs() <= 1e-10);
        }
    }

    #[test]
    fn sqrt_squares_back_for_each_dimension() {
        use proptest::test_runner::{Config, TestRunner};
        for n in 1..=4 {
            let mut runner = TestRunner::new(Config { cases: 100, ..Config::default() });
            runner
                .run(&matrix_strategy(n), |m| {
                    let a = m.adjoint() * m;
                    let s = a.psd_sqrt(false).unwrap();
                    prop_assert!((s * s - a).frobenius_norm() <= 1e-10 * a.frobenius_norm().max(1e-300));
                    Ok(())
                })
                .unwrap();
        }
    }
}
