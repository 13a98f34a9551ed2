//! Characteristic functions computed from kernels, and the unitary
//! equivalence test `V_1(z) = R V_2(z) Q`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::halfplane::{blaschke_b, PointGrid, EXCLUSION_RADIUS, I};
use crate::linalg::CMatrix;
use crate::models::{kernel_eval, pair_scale, KernelModel};

/// Relative size of `sigma_min(Phi)` below which `V` is treated as a pole.
const POLE_GUARD: f64 = 1e-12;

/// `V(z) = b(z) Phi(z)^{-1} Psi(z)` with `Phi(z) = K_i(z) K_i(i)^{-1/2}` and
/// `Psi(z) = K_{-i}(z) K_{-i}(-i)^{-1/2}`.
#[derive(Debug, Clone)]
pub struct CharFunction {
    model: Arc<dyn KernelModel>,
    c_i: CMatrix,
    c_mi: CMatrix,
}

impl CharFunction {
    pub fn build(model: Arc<dyn KernelModel>) -> Result<Self> {
        let k_i = kernel_eval(model.as_ref(), I, I)?;
        let k_mi = kernel_eval(model.as_ref(), -I, -I)?;
        let c_i = k_i.psd_sqrt(true)?;
        let c_mi = k_mi.psd_sqrt(true)?;
        Ok(CharFunction { model, c_i, c_mi })
    }

    pub fn from_model<M: KernelModel + 'static>(model: M) -> Result<Self> {
        Self::build(Arc::new(model))
    }

    pub fn model(&self) -> &Arc<dyn KernelModel> {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.c_i.n()
    }

    /// `K_i(i)^{-1/2}`.
    pub fn c_i(&self) -> CMatrix {
        self.c_i
    }

    /// `K_{-i}(-i)^{-1/2}`.
    pub fn c_mi(&self) -> CMatrix {
        self.c_mi
    }

    pub fn kernel(&self, lambda: Complex64, z: Complex64) -> Result<CMatrix> {
        kernel_eval(self.model.as_ref(), lambda, z)
    }

    pub fn phi(&self, z: Complex64) -> Result<CMatrix> {
        Ok(self.kernel(I, z)? * self.c_i)
    }

    pub fn psi(&self, z: Complex64) -> Result<CMatrix> {
        Ok(self.kernel(-I, z)? * self.c_mi)
    }

    pub fn eval(&self, z: Complex64) -> Result<CMatrix> {
        let b = blaschke_b(z).map_err(|e| e.at(I, z))?;
        let phi = self.phi(z)?;
        let psi = self.psi(z)?;
        let pole = |cond: f64| Error::PoleProximity { point: z, cond };
        let sv = phi.singular_values();
        let smin = sv[0];
        let scale = sv[sv.len() - 1].max(psi.operator_norm());
        if !(smin > POLE_GUARD * scale) {
            return Err(pole(scale / smin));
        }
        let inv = phi.inverse().map_err(|e| match e {
            Error::SingularMatrix { cond } => pole(cond),
            other => other,
        })?;
        let v = (inv * psi).scale(b);
        if !v.is_finite() {
            return Err(Error::NonFinite { point: z });
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairResidual {
    pub max: f64,
    /// `(lambda, z)` attaining the maximum.
    pub worst: Option<(Complex64, Complex64)>,
    pub pairs: usize,
    pub skipped: usize,
}

struct Sample {
    z: Complex64,
    k_zz: CMatrix,
    phi: CMatrix,
    v: Option<CMatrix>,
    b: Complex64,
}

fn sample(c: &CharFunction, z: Complex64) -> Result<Sample> {
    let v = match c.eval(z) {
        Ok(v) => Some(v),
        Err(e) if e.is_pole() => None,
        Err(e) => return Err(e),
    };
    Ok(Sample {
        z,
        k_zz: c.kernel(z, z)?,
        phi: c.phi(z)?,
        v,
        b: blaschke_b(z).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
    })
}

/// Max relative residual of
/// `K_lambda(z) = Phi(z) (I - V(z) V(lambda)*) Phi(lambda)* / (1 - conj(b(lambda)) b(z))`
/// over grid pairs. Relative to `sqrt(||K_lambda(lambda)|| ||K_z(z)||)`;
/// pairs with `|z - conj(lambda)|` below the exclusion radius or touching a
/// pole of `V` are skipped.
pub fn factorization_residual(c: &CharFunction, grid: &PointGrid) -> Result<PairResidual> {
    let samples: Vec<Sample> = grid.points.iter().map(|&z| sample(c, z)).collect::<Result<_>>()?;
    let n = c.n();
    let mut out = PairResidual {
        max: 0.0,
        worst: None,
        pairs: 0,
        skipped: 0,
    };
    for sl in &samples {
        for sz in &samples {
            let (Some(vl), Some(vz)) = (sl.v, sz.v) else {
                out.skipped += 1;
                continue;
            };
            if (sz.z - sl.z.conj()).norm() < EXCLUSION_RADIUS {
                out.skipped += 1;
                continue;
            }
            let k = c.kernel(sl.z, sz.z)?;
            let denom = 1.0 - sl.b.conj() * sz.b;
            let predicted = (sz.phi * (CMatrix::identity(n) - vz * vl.adjoint()) * sl.phi.adjoint()).scale(1.0 / denom);
            let r = (k - predicted).frobenius_norm() / pair_scale(&sl.k_zz, &sz.k_zz);
            out.pairs += 1;
            if !(r <= out.max) {
                out.max = r;
                out.worst = Some((sl.z, sz.z));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvolutionDefect {
    pub max: f64,
    pub evaluated: usize,
    /// Points where `V(z)` or `V(conj z)` sits at a pole.
    pub skipped: Vec<Complex64>,
}

/// `max ||V(z) V(conj z)* - I||_F` over the grid.
pub fn involution_defect(c: &CharFunction, grid: &PointGrid) -> Result<InvolutionDefect> {
    let mut out = InvolutionDefect {
        max: 0.0,
        evaluated: 0,
        skipped: Vec::new(),
    };
    for &z in &grid.points {
        let pair = c.eval(z).and_then(|a| Ok((a, c.eval(z.conj())?)));
        match pair {
            Ok((a, b)) => {
                let d = (a * b.adjoint() - CMatrix::identity(c.n())).frobenius_norm();
                out.max = out.max.max(d);
                out.evaluated += 1;
            }
            Err(e) if e.is_pole() => out.skipped.push(z),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceStatus {
    EquivalentWithCertificate,
    NotEquivalent,
    NoCertificateFound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: Complex64,
    pub singular_values_1: Vec<f64>,
    pub singular_values_2: Vec<f64>,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceResult {
    pub status: EquivalenceStatus,
    #[serde(rename = "R")]
    pub r: Option<CMatrix>,
    #[serde(rename = "Q")]
    pub q: Option<CMatrix>,
    /// `max ||V_1 - R V_2 Q||_F` over the grid (or the screen gap for a
    /// negative verdict).
    pub residual: f64,
    pub unitarity_defect: f64,
    pub witness: Option<Witness>,
    pub note: Option<String>,
}

impl EquivalenceResult {
    fn inconclusive(residual: f64, note: impl Into<String>) -> Self {
        EquivalenceResult {
            status: EquivalenceStatus::NoCertificateFound,
            r: None,
            q: None,
            residual,
            unitarity_defect: f64::NAN,
            witness: None,
            note: Some(note.into()),
        }
    }
}

/// Probe pairs `(z0, w0)` for the matrix path, tried in order.
pub const PROBE_PAIRS: [(Complex64, Complex64); 5] = [
    (Complex64::new(0.0, 2.0), Complex64::new(1.0, 1.0)),
    (Complex64::new(0.0, 3.0), Complex64::new(-1.0, 1.0)),
    (Complex64::new(0.0, 4.0), Complex64::new(2.0, 1.0)),
    (Complex64::new(0.0, 5.0), Complex64::new(-2.0, 1.0)),
    (Complex64::new(0.0, 6.0), Complex64::new(3.0, 1.0)),
];

const CERTIFICATE_UNITARY_TOL: f64 = 1e-8;
/// Accepted unitarity defect of the raw (unpolished) certificate.
const RAW_UNITARY_TOL: f64 = 1e-6;

/// Decides whether `V_1 = R V_2 Q` for constant unitaries `R`, `Q`, on the
/// upper half of `grid`. Sound but incomplete: a certificate proves
/// equivalence, a singular-value mismatch proves inequivalence, anything else
/// is reported as inconclusive.
pub fn equivalence_test(c1: &CharFunction, c2: &CharFunction, grid: &PointGrid, tol: f64) -> Result<EquivalenceResult> {
    if c1.n() != c2.n() {
        return Err(Error::DimensionMismatch {
            left: c1.n(),
            right: c2.n(),
        });
    }
    let n = c1.n();
    let points: Vec<Complex64> = grid.points.iter().copied().filter(|z| z.im > 0.0).collect();
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let v1: Vec<CMatrix> = points.iter().map(|&z| c1.eval(z)).collect::<Result<_>>()?;
    let v2: Vec<CMatrix> = points.iter().map(|&z| c2.eval(z)).collect::<Result<_>>()?;

    // necessary condition: equal singular values everywhere
    let mut worst: Option<Witness> = None;
    for (k, &z) in points.iter().enumerate() {
        let s1 = v1[k].singular_values();
        let s2 = v2[k].singular_values();
        let gap = s1.iter().zip(&s2).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if worst.as_ref().map_or(true, |w| gap > w.gap) {
            worst = Some(Witness {
                point: z,
                singular_values_1: s1,
                singular_values_2: s2,
                gap,
            });
        }
    }
    let witness = worst.expect("non-empty grid");
    if witness.gap > 10.0 * tol {
        return Ok(EquivalenceResult {
            status: EquivalenceStatus::NotEquivalent,
            r: None,
            q: None,
            residual: witness.gap,
            unitarity_defect: f64::NAN,
            witness: Some(witness),
            note: None,
        });
    }

    let residual_for = |r: &CMatrix, q: &CMatrix| -> f64 {
        v1.iter()
            .zip(&v2)
            .fold(0.0_f64, |m, (a, b)| m.max((*a - *r * *b * *q).frobenius_norm()))
    };

    let v_max = v2.iter().fold(0.0_f64, |m, v| m.max(v.operator_norm()));
    if v_max <= tol {
        let id = CMatrix::identity(n);
        return Ok(certificate(id, id, residual_for(&id, &id), tol));
    }

    if n == 1 {
        return scalar_path(c1, c2, &points, tol, residual_for);
    }
    matrix_path(c1, c2, tol, residual_for)
}

fn certificate(r: CMatrix, q: CMatrix, residual: f64, tol: f64) -> EquivalenceResult {
    let defect = r.unitarity_defect().max(q.unitarity_defect());
    if residual <= tol && defect <= CERTIFICATE_UNITARY_TOL {
        EquivalenceResult {
            status: EquivalenceStatus::EquivalentWithCertificate,
            r: Some(r),
            q: Some(q),
            residual,
            unitarity_defect: defect,
            witness: None,
            note: None,
        }
    } else {
        let mut out = EquivalenceResult::inconclusive(residual, "candidate certificate failed verification");
        out.r = Some(r);
        out.q = Some(q);
        out.unitarity_defect = defect;
        out
    }
}

fn scalar_path(
    c1: &CharFunction,
    c2: &CharFunction,
    points: &[Complex64],
    tol: f64,
    residual_for: impl Fn(&CMatrix, &CMatrix) -> f64,
) -> Result<EquivalenceResult> {
    let probes = PROBE_PAIRS.iter().flat_map(|&(z, w)| [z, w]).chain(points.iter().copied());
    for z0 in probes {
        let a = c1.eval(z0)?[(0, 0)];
        let b = c2.eval(z0)?[(0, 0)];
        if b.norm() <= tol {
            continue;
        }
        let zeta = a / b;
        if (zeta.norm() - 1.0).abs() > tol {
            return Ok(EquivalenceResult::inconclusive(
                (zeta.norm() - 1.0).abs(),
                format!("ratio V1/V2 at {z0} has modulus {}", zeta.norm()),
            ));
        }
        let zeta = zeta / zeta.norm();
        let r = CMatrix::scalar(zeta);
        let q = CMatrix::identity(1);
        let res = residual_for(&r, &q);
        let mut out = certificate(r, q, res, tol);
        if out.status != EquivalenceStatus::EquivalentWithCertificate {
            out.note = Some("ratio V1/V2 is not constant on the grid".into());
        }
        return Ok(out);
    }
    Ok(EquivalenceResult::inconclusive(f64::NAN, "V2 vanishes at every probe"))
}

/// Eigenpairs of `V(z)^{-1} V(w)`.
fn pencil(c: &CharFunction, z: Complex64, w: Complex64) -> Result<(Vec<Complex64>, CMatrix, CMatrix)> {
    let m = c.eval(z)?.inverse()? * c.eval(w)?;
    let (values, vectors) = m.general_eigen(1e-6)?;
    Ok((values, vectors, m))
}

fn matrix_path(
    c1: &CharFunction,
    c2: &CharFunction,
    tol: f64,
    residual_for: impl Fn(&CMatrix, &CMatrix) -> f64,
) -> Result<EquivalenceResult> {
    let n = c1.n();
    let mut best: Option<EquivalenceResult> = None;
    for (p, &(z0, w0)) in PROBE_PAIRS.iter().enumerate() {
        let (z1, w1) = PROBE_PAIRS[(p + 1) % PROBE_PAIRS.len()];
        let attempt = || -> Result<Option<(CMatrix, CMatrix)>> {
            let (alpha, pa, _) = pencil(c1, z0, w0)?;
            let (beta, pb, _) = pencil(c2, z0, w0)?;
            // match eigenvalues of B to those of A
            let scale = alpha.iter().fold(1.0_f64, |m, a| m.max(a.norm()));
            let mut order = Vec::with_capacity(n);
            for a in &alpha {
                let (m, d) = beta
                    .iter()
                    .enumerate()
                    .map(|(m, b)| (m, (a - b).norm()))
                    .min_by(|x, y| x.1.total_cmp(&y.1))
                    .expect("nonempty spectrum");
                if d > 1e-6 * scale || order.contains(&m) {
                    return Ok(None);
                }
                order.push(m);
            }
            let pb = CMatrix::from_fn(n, |i, k| pb[(i, order[k])]);
            let pa_inv = pa.inverse()?;
            let pb_inv = pb.inverse()?;
            // Phases: Q pa = pb D, so Y = D X D^{-1} for X = pa^{-1} M1 pa,
            // Y = pb^{-1} M2 pb whenever M1 = Q* M2 Q. Candidates are a second
            // pencil and the products V(z)* V(w), in which R cancels.
            let mut candidates = vec![(
                c1.eval(z1)?.inverse()? * c1.eval(w1)?,
                c2.eval(z1)?.inverse()? * c2.eval(w1)?,
            )];
            for (s, t) in [(z0, w0), (z1, w1), (z0, w1)] {
                candidates.push((c1.eval(s)?.adjoint() * c1.eval(t)?, c2.eval(s)?.adjoint() * c2.eval(t)?));
            }
            let transformed: Vec<(CMatrix, CMatrix)> = candidates
                .iter()
                .map(|(m1, m2)| (pa_inv * *m1 * pa, pb_inv * *m2 * pb))
                .collect();
            let mut d = vec![Complex64::new(1.0, 0.0); n];
            for (k, dk) in d.iter_mut().enumerate().skip(1) {
                let best = transformed
                    .iter()
                    .map(|(x, y)| (x[(0, k)], y[(0, k)], y[(0, k)].norm() / y.frobenius_norm()))
                    .max_by(|a, b| a.2.total_cmp(&b.2));
                // a zero coupling leaves the phase free; R absorbs it
                if let Some((xk, yk, rel)) = best {
                    if rel > 1e-8 {
                        let q = xk / yk;
                        *dk = q / q.norm();
                    }
                }
            }
            let q_raw = pb * CMatrix::diag(&d) * pa_inv;
            let r_raw = c1.eval(z0)? * q_raw.adjoint() * c2.eval(z0)?.inverse()?;
            if q_raw.unitarity_defect() > RAW_UNITARY_TOL || r_raw.unitarity_defect() > RAW_UNITARY_TOL {
                return Ok(None);
            }
            Ok(Some((r_raw.nearest_unitary()?, q_raw.nearest_unitary()?)))
        };
        match attempt() {
            Ok(Some((r, q))) => {
                let res = residual_for(&r, &q);
                let out = certificate(r, q, res, tol);
                if out.status == EquivalenceStatus::EquivalentWithCertificate {
                    return Ok(out);
                }
                if best.as_ref().map_or(true, |b| res < b.residual) {
                    best = Some(out);
                }
            }
            Ok(None) => {}
            Err(e) if matches!(e.root(), Error::DegenerateSpectrum | Error::SingularMatrix { .. }) || e.is_pole() => {}
            Err(e) => return Err(e),
        }
    }
    Ok(best.unwrap_or_else(|| {
        EquivalenceResult::inconclusive(f64::NAN, "eigen-matching failed at every probe pair")
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contractivity {
    /// `max ||V(z)||` over upper grid points.
    pub max_upper: f64,
    /// `min ||V(z)||` over lower grid points.
    pub min_lower: f64,
    pub evaluated: usize,
    /// Points at a pole of `V`.
    pub skipped: Vec<Complex64>,
}

/// Operator norms of `V` on both halves of `grid`.
pub fn contractivity(c: &CharFunction, grid: &PointGrid) -> Result<Contractivity> {
    let mut out = Contractivity {
        max_upper: 0.0,
        min_lower: f64::INFINITY,
        evaluated: 0,
        skipped: Vec::new(),
    };
    for &z in grid.points.iter().filter(|z| z.im != 0.0) {
        match c.eval(z) {
            Ok(v) => {
                let norm = v.operator_norm();
                if z.im > 0.0 {
                    out.max_upper = out.max_upper.max(norm);
                } else {
                    out.min_lower = out.min_lower.min(norm);
                }
                out.evaluated += 1;
            }
            Err(e) if e.is_pole() => out.skipped.push(z),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
