//! Kernel models `K_lambda(z) = Gamma(z)* Gamma(lambda)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::halfplane::{Exclusion, PointGrid};
use crate::linalg::{hermitian_eigen_dense, CMatrix};
use crate::report::{Check, VerificationReport};

mod atomic;
mod direct;
mod free_half_line;
mod paley_wiener;
pub mod sturm_liouville;
mod toeplitz;

pub use atomic::{AtomicMeasure, AtomicMeasureModel};
pub use direct::{DirectCharModel, DirectV};
pub use free_half_line::{sigma, FreeHalfLineModel};
pub use paley_wiener::PaleyWienerModel;
pub use sturm_liouville::{Coefficient, SlSolution, SturmLiouvilleModel};
pub use toeplitz::{DiskAutomorphism, ToeplitzSlitModel};

pub trait KernelModel: fmt::Debug + Send + Sync {
    fn name(&self) -> String;

    /// Deficiency index, i.e. the matrix dimension of the kernel.
    fn dim(&self) -> usize;

    /// The kernel formula. Callers go through [`kernel_eval`], which enforces
    /// the domain first.
    fn kernel(&self, lambda: Complex64, z: Complex64) -> Result<CMatrix>;

    /// Points and real intervals where the kernel itself is undefined.
    fn singular_set(&self) -> Vec<Exclusion> {
        Vec::new()
    }

    /// Zones to drop from verification grids: the singular set plus known
    /// zeros and poles of the characteristic function, mirrored so that a
    /// both-halves grid stays closed under conjugation.
    fn grid_exclusions(&self) -> Vec<Exclusion> {
        self.singular_set()
    }

    fn boundary_evaluable(&self) -> bool {
        false
    }

    /// Remarks that belong in any report about this model.
    fn notes(&self) -> Vec<String> {
        Vec::new()
    }
}

fn check_point(model: &dyn KernelModel, w: Complex64) -> Result<()> {
    if !w.is_finite() {
        return Err(Error::NonFinite { point: w });
    }
    if w.im == 0.0 && !model.boundary_evaluable() {
        return Err(Error::DomainViolation {
            point: w,
            reason: format!("{} is not evaluable on the real axis", model.name()),
        });
    }
    if let Some(e) = model.singular_set().iter().find(|e| e.distance(w) == 0.0) {
        return Err(Error::DomainViolation {
            point: w,
            reason: format!("inside excluded zone {e:?}"),
        });
    }
    Ok(())
}

/// `K_lambda(z)` with domain checks; failures carry the offending pair.
pub fn kernel_eval(model: &dyn KernelModel, lambda: Complex64, z: Complex64) -> Result<CMatrix> {
    let inner = || -> Result<CMatrix> {
        check_point(model, lambda)?;
        check_point(model, z)?;
        let k = model.kernel(lambda, z)?;
        if !k.is_finite() {
            return Err(Error::NonFinite { point: z });
        }
        Ok(k)
    };
    inner().map_err(|e| e.at(lambda, z))
}

/// Adds `amount * (z - conj(lambda)) * I` to another model's kernel. Breaks
/// Hermitian symmetry; used for fault-injection tests.
#[derive(Debug, Clone)]
pub struct CorruptedModel {
    pub inner: Arc<dyn KernelModel>,
    pub amount: f64,
}

impl KernelModel for CorruptedModel {
    fn name(&self) -> String {
        format!("corrupted({})", self.inner.name())
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn kernel(&self, lambda: Complex64, z: Complex64) -> Result<CMatrix> {
        let k = self.inner.kernel(lambda, z)?;
        Ok(k + CMatrix::identity(k.n()).scale((z - lambda.conj()) * self.amount))
    }

    fn singular_set(&self) -> Vec<Exclusion> {
        self.inner.singular_set()
    }

    fn grid_exclusions(&self) -> Vec<Exclusion> {
        self.inner.grid_exclusions()
    }

    fn boundary_evaluable(&self) -> bool {
        self.inner.boundary_evaluable()
    }
}

/// Positive scale for relative comparisons between `K_lambda(z)` entries:
/// the Cauchy-Schwarz bound `sqrt(||K_lambda(lambda)|| ||K_z(z)||)`.
pub fn pair_scale(k_ll: &CMatrix, k_zz: &CMatrix) -> f64 {
    (k_ll.frobenius_norm() * k_zz.frobenius_norm()).sqrt().max(f64::MIN_POSITIVE)
}

/// Six-point subsets used by the Gram checks: strided so that each subset
/// mixes heights and half-planes.
pub(crate) fn gram_subsets(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return Vec::new();
    }
    let size = 6.min(n);
    let groups = n.div_ceil(size);
    (0..groups)
        .map(|g| {
            let mut idx: Vec<usize> = (0..size).map(|j| (g + j * groups) % n).collect();
            idx.sort_unstable();
            idx.dedup();
            idx
        })
        .collect()
}

/// Smallest eigenvalue of the diagonally normalized block Gram matrix, i.e.
/// of `D^{-1/2} G D^{-1/2}` with `D` the diagonal block norms. The scaling is
/// a congruence, so positivity is unchanged while points of very different
/// kernel magnitude are weighted evenly.
pub fn normalized_gram_min_eigenvalue<F>(points: &[Complex64], mut kernel: F) -> Result<f64>
where
    F: FnMut(Complex64, Complex64) -> Result<CMatrix>,
{
    let diag: Vec<CMatrix> = points.iter().map(|&p| kernel(p, p)).collect::<Result<_>>()?;
    let d = diag[0].n();
    let size = d * points.len();
    let scales: Vec<f64> = diag.iter().map(|k| k.frobenius_norm().max(f64::MIN_POSITIVE)).collect();
    let mut g = vec![Complex64::new(0.0, 0.0); size * size];
    for (j, &pj) in points.iter().enumerate() {
        for (k, &pk) in points.iter().enumerate() {
            let block = if j == k { diag[j] } else { kernel(pk, pj)? };
            let s = (scales[j] * scales[k]).sqrt();
            for r in 0..d {
                for c in 0..d {
                    g[(j * d + r) * size + k * d + c] = block[(r, c)] / s;
                }
            }
        }
    }
    // symmetrize: the asymmetric part is measured separately
    let mut h = g.clone();
    for a in 0..size {
        for b in 0..size {
            h[a * size + b] = (g[a * size + b] + g[b * size + a].conj()) * 0.5;
        }
    }
    let (values, _) = hermitian_eigen_dense(size, &h)?;
    Ok(values[0])
}

/// Structural checks of a kernel model on a grid: Hermitian symmetry,
/// positive invertible diagonal values, invertibility for same-half-plane
/// pairs, and positivity of 6-point Gram matrices.
pub fn validate_model(model: &dyn KernelModel, grid: &PointGrid, tol: f64) -> Result<VerificationReport> {
    let pts = &grid.points;
    let mut report = VerificationReport::new("validate");
    for note in model.notes() {
        report.note(note);
    }
    let diag: Vec<CMatrix> = pts
        .iter()
        .map(|&p| kernel_eval(model, p, p))
        .collect::<Result<_>>()?;

    let mut symmetry: f64 = 0.0;
    let mut same_half_cond: f64 = 0.0;
    for (a, &la) in pts.iter().enumerate() {
        for (b, &zb) in pts.iter().enumerate() {
            if b < a {
                continue;
            }
            let k = kernel_eval(model, la, zb)?;
            let kt = kernel_eval(model, zb, la)?;
            let scale = pair_scale(&diag[a], &diag[b]);
            symmetry = symmetry.max((k.adjoint() - kt).frobenius_norm() / scale);
            if la.im * zb.im > 0.0 {
                same_half_cond = same_half_cond.max(k.condition_number());
            }
        }
    }
    report.push(Check::at_most("hermitian_symmetry", symmetry, tol));

    let mut min_diag_eig = f64::INFINITY;
    let mut max_diag_cond: f64 = 0.0;
    for k in &diag {
        let h = k.hermitian_part();
        let eig = h.hermitian_eigen()?;
        let top = eig.values.last().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
        min_diag_eig = min_diag_eig.min(eig.values[0] / top);
        max_diag_cond = max_diag_cond.max(k.condition_number());
    }
    report.push(Check::at_least("diagonal_min_relative_eigenvalue", min_diag_eig, 0.0).with_detail(format!(
        "max condition of K_lambda(lambda): {max_diag_cond:.3e}"
    )));
    report.push(Check::at_most("diagonal_condition", max_diag_cond, 1e12));
    report.push(Check::at_most("same_half_plane_condition", same_half_cond, 1e12));

    let mut gram_min = f64::INFINITY;
    for subset in gram_subsets(pts.len()) {
        let sub: Vec<Complex64> = subset.iter().map(|&i| pts[i]).collect();
        let m = normalized_gram_min_eigenvalue(&sub, |l, z| kernel_eval(model, l, z))?;
        gram_min = gram_min.min(m);
    }
    report.push(Check::at_least("gram_min_eigenvalue", gram_min, -tol));
    Ok(report)
}
