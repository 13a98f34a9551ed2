//! Herglotz functions `Omega = (I + A V)(I - A V)^{-1}`, their kernels, the
//! `W` multiplier, and recovery of atomic Clark measures.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::halfplane::{PointGrid, EXCLUSION_RADIUS, I};
use crate::linalg::{solve_dense, CMatrix};
use crate::livsic::{CharFunction, PairResidual};
use crate::models::pair_scale;

pub use crate::models::AtomicMeasure;

const REMOVABLE_RADIUS: f64 = 1e-6;

/// `(I + X)(I - X)^{-1}`.
pub(crate) fn cayley_omega(x: &CMatrix, z: Complex64) -> Result<CMatrix> {
    let id = CMatrix::identity(x.n());
    let inv = (id - *x).inverse().map_err(|e| match e {
        Error::SingularMatrix { cond } => Error::NearSingular { min_eigenvalue: 1.0 / cond },
        other => other,
    });
    let inv = inv.map_err(|e| e.at(z, z))?;
    Ok((id + *x) * inv)
}

/// Fourth-order central difference along the real direction, improved by
/// one Richardson step.
pub(crate) fn derivative<F>(f: F, z: Complex64) -> Result<CMatrix>
where
    F: Fn(Complex64) -> Result<CMatrix>,
{
    let stencil = |h: f64| -> Result<CMatrix> {
        let h_c = Complex64::new(h, 0.0);
        let d1 = f(z + h_c)? - f(z - h_c)?;
        let d2 = f(z + h_c * 2.0)? - f(z - h_c * 2.0)?;
        Ok((d1.scale_real(8.0) - d2).scale_real(1.0 / (12.0 * h)))
    };
    let h = 0.05 * z.im.abs().clamp(1e-3, 1.0);
    let coarse = stencil(h)?;
    let fine = stencil(h / 2.0)?;
    Ok((fine.scale_real(16.0) - coarse).scale_real(1.0 / 15.0))
}

/// `(Omega(z) + Omega(lambda)*) / (pi i (conj(lambda) - z))`, continued
/// through `z = conj(lambda)` by `i Omega'(conj(lambda)) / pi`.
pub(crate) fn herglotz_kernel_from<F>(omega: F, lambda: Complex64, z: Complex64) -> Result<CMatrix>
where
    F: Fn(Complex64) -> Result<CMatrix>,
{
    let d = lambda.conj() - z;
    if d.norm() < REMOVABLE_RADIUS {
        let mid = (z + lambda.conj()) * 0.5;
        return Ok(derivative(omega, mid)?.scale(Complex64::new(0.0, 1.0 / PI)));
    }
    let sum = omega(z)? + omega(lambda)?.adjoint();
    Ok(sum.scale(1.0 / (Complex64::new(0.0, PI) * d)))
}

/// `Omega_A(z) = (I + A V(z))(I - A V(z))^{-1}` for a unitary Clark parameter `A`.
#[derive(Debug, Clone)]
pub struct HerglotzFunction {
    source: CharFunction,
    a: CMatrix,
}

impl HerglotzFunction {
    pub fn new(source: CharFunction, a: CMatrix) -> Result<Self> {
        if a.n() != source.n() {
            return Err(Error::DimensionMismatch {
                left: source.n(),
                right: a.n(),
            });
        }
        if !a.is_unitary(1e-10) {
            return Err(Error::InvalidInput("Clark parameter must be unitary".into()));
        }
        Ok(HerglotzFunction { source, a })
    }

    /// Clark parameter `A = I`.
    pub fn identity(source: CharFunction) -> Self {
        let a = CMatrix::identity(source.n());
        HerglotzFunction { source, a }
    }

    /// `A = i I`, i.e. `Omega = (I + iV)(I - iV)^{-1}`.
    pub fn cayley(source: CharFunction) -> Self {
        let a = CMatrix::identity(source.n()).scale(I);
        HerglotzFunction { source, a }
    }

    pub fn source(&self) -> &CharFunction {
        &self.source
    }

    pub fn clark_parameter(&self) -> CMatrix {
        self.a
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn omega(&self, z: Complex64) -> Result<CMatrix> {
        let v = self.source.eval(z)?;
        cayley_omega(&(self.a * v), z)
    }

    /// `K^V_lambda(z)` built from this `Omega`.
    pub fn kernel(&self, lambda: Complex64, z: Complex64) -> Result<CMatrix> {
        herglotz_kernel_from(|w| self.omega(w), lambda, z).map_err(|e| e.at(lambda, z))
    }

    /// `W(z) = sqrt(pi) (z + i) Phi(z) (Omega(z) + I)^{-1}`.
    pub fn w(&self, z: Complex64) -> Result<CMatrix> {
        let om = self.omega(z)?;
        let inv = (om + CMatrix::identity(self.n())).inverse()?;
        Ok((self.source.phi(z)? * inv).scale((z + I) * PI.sqrt()))
    }

    fn is_scalar_parameter(&self) -> bool {
        let c = self.a[(0, 0)];
        (self.a - CMatrix::identity(self.n()).scale(c)).frobenius_norm() <= 1e-12
    }
}

/// Smallest eigenvalue of `Re Omega(z)` over the upper half of `grid`,
/// relative to `max(1, ||Omega(z)||)`.
pub fn real_part_min_eigenvalue(h: &HerglotzFunction, grid: &PointGrid) -> Result<f64> {
    let mut min = f64::INFINITY;
    for &z in grid.points.iter().filter(|z| z.im > 0.0) {
        let om = h.omega(z)?;
        let e = om.hermitian_part().hermitian_eigen()?;
        min = min.min(e.values[0] / om.operator_norm().max(1.0));
    }
    Ok(min)
}

/// `max ||Omega(z) + Omega(conj z)*||_F` relative to `max(1, ||Omega(z)||)`,
/// over points where both sides evaluate.
pub fn reflection_defect(h: &HerglotzFunction, grid: &PointGrid) -> Result<f64> {
    let mut max: f64 = 0.0;
    for &z in &grid.points {
        let pair = h.omega(z).and_then(|a| Ok((a, h.omega(z.conj())?)));
        match pair {
            Ok((a, b)) => max = max.max((a + b.adjoint()).frobenius_norm() / a.operator_norm().max(1.0)),
            Err(e) if e.is_pole() || matches!(e.root(), Error::NearSingular { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(max)
}

/// Max relative residual of `K_lambda(z) = W(z) K^V_lambda(z) W(lambda)*`.
///
/// The identity needs a scalar Clark parameter (`A = e^{i alpha} I`).
pub fn w_multiplier_residual(h: &HerglotzFunction, grid: &PointGrid) -> Result<PairResidual> {
    if !h.is_scalar_parameter() {
        return Err(Error::InvalidInput(
            "the W-multiplier identity requires a scalar Clark parameter".into(),
        ));
    }
    let c = h.source();
    let mut samples = Vec::new();
    let mut skipped = 0;
    for &z in &grid.points {
        match h.w(z) {
            Ok(w) => samples.push((z, w, c.kernel(z, z)?)),
            Err(e) if e.is_pole() || matches!(e.root(), Error::NearSingular { .. } | Error::SingularMatrix { .. }) => {
                skipped += 1
            }
            Err(e) => return Err(e),
        }
    }
    let mut out = PairResidual {
        max: 0.0,
        worst: None,
        pairs: 0,
        skipped,
    };
    for (l, wl, kll) in &samples {
        for (z, wz, kzz) in &samples {
            if (*z - l.conj()).norm() < EXCLUSION_RADIUS {
                out.skipped += 1;
                continue;
            }
            let k = c.kernel(*l, *z)?;
            let kv = h.kernel(*l, *z)?;
            let r = (k - *wz * kv * wl.adjoint()).frobenius_norm() / pair_scale(kll, kzz);
            out.pairs += 1;
            if !(r <= out.max) {
                out.max = r;
                out.worst = Some((*l, *z));
            }
        }
    }
    Ok(out)
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Local maxima of `x -> tr Re Omega(x + i eps0)` on `xs` that exceed ten
/// times the median, each refined by golden-section search between its
/// neighbours.
pub fn atom_locate(h: &HerglotzFunction, xs: &[f64], eps0: f64) -> Result<Vec<f64>> {
    if xs.len() < 3 {
        return Ok(Vec::new());
    }
    let profile = |x: f64| -> Result<f64> {
        Ok(h.omega(Complex64::new(x, eps0))?.hermitian_part().trace().re)
    };
    let values: Vec<f64> = xs.iter().map(|&x| profile(x)).collect::<Result<_>>()?;
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let threshold = 10.0 * median.abs().max(f64::MIN_POSITIVE);
    let f = |x: f64| profile(x).unwrap_or(f64::NEG_INFINITY);
    let mut out = Vec::new();
    for k in 1..xs.len() - 1 {
        if values[k] > threshold && values[k] > values[k - 1] && values[k] >= values[k + 1] {
            out.push(golden_max(&f, xs[k - 1], xs[k + 1]));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomFit {
    pub measure: AtomicMeasure,
    /// Stieltjes-inversion estimates before the least-squares refinement.
    pub initial_weights: Vec<CMatrix>,
    /// Max relative mismatch between the refit kernel and `K^V` on the sample pairs.
    pub residual: f64,
}

pub const FIT_RESIDUAL_LIMIT: f64 = 1e-4;

/// Deterministic sample pairs in the upper half-plane for [`atom_fit`].
pub fn default_sample_pairs() -> Vec<(Complex64, Complex64)> {
    let xs = [-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0];
    let ys = [0.05, 0.3, 1.0, 4.0];
    let pts: Vec<Complex64> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| Complex64::new(x, y)))
        .collect();
    let n = pts.len();
    let mut pairs: Vec<(Complex64, Complex64)> = pts.iter().map(|&p| (p, p)).collect();
    pairs.extend((0..n).map(|k| (pts[k], pts[(7 * k + 3) % n])));
    pairs
}

/// `(1/pi^2) sum_j W_j / ((t_j - conj(lambda))(t_j - z))`.
pub fn atomic_herglotz_kernel(measure: &AtomicMeasure, lambda: Complex64, z: Complex64) -> CMatrix {
    measure.cauchy_kernel(lambda, z).scale_real(1.0 / (PI * PI))
}

/// Weights at the given locations: Stieltjes inversion
/// `W_j ~ pi eps Re Omega(x_j + i eps)` (Richardson over two `eps`), then a
/// least-squares fit of `(1/pi^2) sum_j W_j / ((t_j - conj(lambda))(t_j - z))`
/// to `K^V` on the sample pairs, projected onto PSD weights.
pub fn atom_fit(h: &HerglotzFunction, locations: &[f64], sample_pairs: &[(Complex64, Complex64)]) -> Result<AtomFit> {
    let m = locations.len();
    if m == 0 {
        return Err(Error::InvalidInput("no atom locations to fit".into()));
    }
    if sample_pairs.len() < 2 * m {
        return Err(Error::InvalidInput(format!(
            "need at least {} sample pairs, got {}",
            2 * m,
            sample_pairs.len()
        )));
    }
    let n = h.n();
    let (e1, e2) = (1e-3, 5e-4);
    let mut initial = Vec::with_capacity(m);
    for &x in locations {
        let w1 = h.omega(Complex64::new(x, e1))?.hermitian_part().scale_real(PI * e1);
        let w2 = h.omega(Complex64::new(x, e2))?.hermitian_part().scale_real(PI * e2);
        initial.push(w2.scale_real(2.0) - w1);
    }

    let targets: Vec<CMatrix> = sample_pairs
        .iter()
        .map(|&(l, z)| h.kernel(l, z))
        .collect::<Result<_>>()?;
    let rows: Vec<(Vec<Complex64>, f64)> = sample_pairs
        .iter()
        .zip(&targets)
        .map(|(&(l, z), k)| {
            let coeffs = locations
                .iter()
                .map(|&t| 1.0 / ((t - l.conj()) * (t - z) * (PI * PI)))
                .collect();
            (coeffs, 1.0 / k.frobenius_norm().max(f64::MIN_POSITIVE))
        })
        .collect();
    // normal equations, rows weighted by 1/||K^V||
    let mut gram = vec![Complex64::new(0.0, 0.0); m * m];
    for (coeffs, wt) in &rows {
        for a in 0..m {
            for b in 0..m {
                gram[a * m + b] += coeffs[a].conj() * coeffs[b] * (wt * wt);
            }
        }
    }
    let mut weights = vec![CMatrix::zeros(n); m];
    for r in 0..n {
        for s in 0..n {
            let mut rhs = vec![Complex64::new(0.0, 0.0); m];
            for ((coeffs, wt), k) in rows.iter().zip(&targets) {
                for a in 0..m {
                    rhs[a] += coeffs[a].conj() * k[(r, s)] * (wt * wt);
                }
            }
            let sol = solve_dense(m, gram.clone(), rhs, 1).ok_or(Error::SingularMatrix { cond: f64::INFINITY })?;
            for a in 0..m {
                weights[a][(r, s)] = sol[a];
            }
        }
    }
    let mut atoms = Vec::with_capacity(m);
    for (&x, w) in locations.iter().zip(&weights) {
        let eig = w.hermitian_part().hermitian_eigen()?;
        let clamped: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
        let u = eig.vectors;
        atoms.push((x, (u * CMatrix::diag_real(&clamped) * u.adjoint()).hermitian_part()));
    }
    let measure = AtomicMeasure::new(atoms)?;
    let residual = sample_pairs
        .iter()
        .zip(&targets)
        .fold(0.0_f64, |acc, (&(l, z), k)| {
            let fit = atomic_herglotz_kernel(&measure, l, z);
            acc.max((fit - *k).frobenius_norm() / k.frobenius_norm().max(f64::MIN_POSITIVE))
        });
    if !(residual <= FIT_RESIDUAL_LIMIT) {
        return Err(Error::FitResidualTooLarge { residual });
    }
    Ok(AtomFit {
        measure,
        initial_weights: initial,
        residual,
    })
}
