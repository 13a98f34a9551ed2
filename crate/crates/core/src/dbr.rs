//! deBranges-Rovnyak kernels, the isometric multipliers `U`, `Q`, the
//! extreme-point classifier, and the angular-derivative probe.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::halfplane::{blaschke_b_inverse, radial_sequence, PointGrid, RadialTarget, I};
use crate::herglotz::{derivative, HerglotzFunction};
use crate::linalg::CMatrix;
use crate::livsic::{CharFunction, PairResidual};
use crate::models::pair_scale;
use crate::quadrature::{simpson_nodes, simpson_weights};

type ThetaFn = Arc<dyn Fn(Complex64) -> Result<CMatrix> + Send + Sync>;

/// A contractive analytic matrix function on the upper half-plane.
#[derive(Clone)]
pub struct ContractiveFunction {
    n: usize,
    f: ThetaFn,
}

impl fmt::Debug for ContractiveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContractiveFunction(n={})", self.n)
    }
}

impl ContractiveFunction {
    pub fn new(n: usize, f: impl Fn(Complex64) -> Result<CMatrix> + Send + Sync + 'static) -> Self {
        ContractiveFunction { n, f: Arc::new(f) }
    }

    pub fn from_char(c: &CharFunction) -> Self {
        let c = c.clone();
        Self::new(c.n(), move |z| c.eval(z))
    }

    pub fn constant(m: CMatrix) -> Self {
        Self::new(m.n(), move |_| Ok(m))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, z: Complex64) -> Result<CMatrix> {
        (self.f)(z)
    }
}

/// `Delta_w(z) = (i / 2 pi) (I - Theta(z) Theta(w)*) / (z - conj(w))`.
pub fn dbr_kernel_eval(theta: &ContractiveFunction, w: Complex64, z: Complex64) -> Result<CMatrix> {
    let tz = theta.eval(z)?;
    let tw = theta.eval(w)?;
    let num = CMatrix::identity(theta.n()) - tz * tw.adjoint();
    Ok(num.scale(Complex64::new(0.0, 1.0 / (2.0 * PI)) / (z - w.conj())))
}

/// `(1 / 2 pi i) (Theta(z) - Theta(lambda)) / (z - lambda)`, with the
/// derivative `Theta'(lambda) / (2 pi i)` used when `|z - lambda| < 1e-6`.
pub fn conj_kernel_eval(theta: &ContractiveFunction, lambda: Complex64, z: Complex64) -> Result<CMatrix> {
    let factor = 1.0 / Complex64::new(0.0, 2.0 * PI);
    if (z - lambda).norm() < 1e-6 {
        let mid = (z + lambda) * 0.5;
        return Ok(derivative(|w| theta.eval(w), mid)?.scale(factor));
    }
    let diff = theta.eval(z)? - theta.eval(lambda)?;
    Ok(diff.scale(factor / (z - lambda)))
}

/// Which `Q` the multiplier check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QVariant {
    /// `Q = (I - iV)/2 = (I + Omega)^{-1}` for `Omega = (I + iV)(I - iV)^{-1}`.
    Corrected,
    /// `Q = (I - V)/2`; fails the identity, kept for fault injection.
    Printed,
}

impl QVariant {
    pub fn eval(self, v: &CMatrix) -> CMatrix {
        let id = CMatrix::identity(v.n());
        match self {
            QVariant::Corrected => (id - v.scale(I)).scale_real(0.5),
            QVariant::Printed => (id - *v).scale_real(0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiplierResiduals {
    /// `K_lambda(z) = U(z) Delta_lambda(z) U(lambda)*`, `U = sqrt(pi)(z + i) Phi`.
    pub u: PairResidual,
    /// `Delta_lambda(z) = Q(z) K^V_lambda(z) Q(lambda)*`.
    pub q: PairResidual,
    /// `max ||U Q - W|| / ||W||` pointwise.
    pub uq_minus_w: f64,
}

pub fn multiplier_residuals(c: &CharFunction, grid: &PointGrid) -> Result<MultiplierResiduals> {
    multiplier_residuals_with(c, grid, QVariant::Corrected)
}

/// Multiplier identities over pairs from the upper half of `grid`.
pub fn multiplier_residuals_with(c: &CharFunction, grid: &PointGrid, variant: QVariant) -> Result<MultiplierResiduals> {
    let theta = ContractiveFunction::from_char(c);
    let h = HerglotzFunction::cayley(c.clone());
    struct Sample {
        z: Complex64,
        u: CMatrix,
        q: CMatrix,
        k_zz: CMatrix,
        d_zz: CMatrix,
    }
    let mut samples = Vec::new();
    let mut uq_minus_w: f64 = 0.0;
    for &z in grid.points.iter().filter(|z| z.im > 0.0) {
        let v = c.eval(z)?;
        let u = c.phi(z)?.scale((z + I) * PI.sqrt());
        let q = variant.eval(&v);
        let w = h.w(z)?;
        uq_minus_w = uq_minus_w.max((u * QVariant::Corrected.eval(&v) - w).frobenius_norm() / w.frobenius_norm());
        samples.push(Sample {
            z,
            u,
            q,
            k_zz: c.kernel(z, z)?,
            d_zz: dbr_kernel_eval(&theta, z, z)?,
        });
    }
    let mut ures = PairResidual {
        max: 0.0,
        worst: None,
        pairs: 0,
        skipped: 0,
    };
    let mut qres = ures;
    for sl in &samples {
        for sz in &samples {
            let k = c.kernel(sl.z, sz.z)?;
            let d = dbr_kernel_eval(&theta, sl.z, sz.z)?;
            let kv = h.kernel(sl.z, sz.z)?;
            let ru = (k - sz.u * d * sl.u.adjoint()).frobenius_norm() / pair_scale(&sl.k_zz, &sz.k_zz);
            let rq = (d - sz.q * kv * sl.q.adjoint()).frobenius_norm() / pair_scale(&sl.d_zz, &sz.d_zz);
            for (acc, r) in [(&mut ures, ru), (&mut qres, rq)] {
                acc.pairs += 1;
                if !(r <= acc.max) {
                    acc.max = r;
                    acc.worst = Some((sl.z, sz.z));
                }
            }
        }
    }
    Ok(MultiplierResiduals {
        u: ures,
        q: qres,
        uq_minus_w,
    })
}

/// `sigma_max(V(x + i eps))` for each `x`.
pub fn boundary_modulus(c: &CharFunction, xs: &[f64], eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("boundary offset must be positive, got {eps}")));
    }
    xs.iter()
        .map(|&x| Ok(c.eval(Complex64::new(x, eps))?.operator_norm()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremeVerdict {
    Extreme,
    NonExtreme,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremeResult {
    pub verdict: ExtremeVerdict,
    pub ladder: Vec<f64>,
    /// `I(eps)` for each ladder step.
    pub integrals: Vec<f64>,
    /// `I(eps_{k+1}) / I(eps_k)`.
    pub ratios: Vec<f64>,
    /// Poisson mass `(1/pi) int dx/(1+x^2)` of the nodes where
    /// `sigma_max >= 1 - 1e-3`, at the smallest `eps`.
    pub near_unimodular_mass: f64,
    pub panels: usize,
}

pub const EXTREME_LADDER: [f64; 3] = [1e-2, 1e-3, 1e-4];
const SIGMA_CAP: f64 = 1.0 - 1e-12;

/// Classifies `V` by the divergence of
/// `int_{-R}^{R} tr log(I - |V(x + i eps)|) / (1 + x^2) dx` along the ladder.
pub fn extreme_test(c: &CharFunction, r: f64, ladder: &[f64], panels: usize) -> Result<ExtremeResult> {
    if !(r >= 3.0) {
        return Err(Error::InvalidInput(format!("integration half-width must be at least 3, got {r}")));
    }
    if ladder.len() < 2 {
        return Err(Error::InvalidInput("ladder needs at least two offsets".into()));
    }
    let nodes = simpson_nodes(-r, r, panels);
    let weights = simpson_weights(-r, r, panels);
    let mut integrals = Vec::with_capacity(ladder.len());
    let mut near_unimodular_mass = 0.0;
    for (step, &eps) in ladder.iter().enumerate() {
        let mut total = 0.0;
        let mut mass = 0.0;
        for (&x, &w) in nodes.iter().zip(&weights) {
            let sv = c.eval(Complex64::new(x, eps))?.singular_values();
            let poisson = 1.0 / (1.0 + x * x);
            let trace_log: f64 = sv.iter().map(|s| (1.0 - s.min(SIGMA_CAP)).ln()).sum();
            total += w * trace_log * poisson;
            if sv.last().copied().unwrap_or(0.0) >= 1.0 - 1e-3 {
                mass += w * poisson / PI;
            }
        }
        integrals.push(total);
        if step == ladder.len() - 1 {
            near_unimodular_mass = mass;
        }
    }
    let ratios: Vec<f64> = integrals.windows(2).map(|p| p[1] / p[0]).collect();
    let diverging = ratios.iter().all(|&q| q >= 1.5);
    let last_change = {
        let k = integrals.len();
        ((integrals[k - 1] - integrals[k - 2]) / integrals[k - 2]).abs()
    };
    let verdict = if diverging || near_unimodular_mass >= 0.05 {
        ExtremeVerdict::Extreme
    } else if last_change < 0.01 {
        ExtremeVerdict::NonExtreme
    } else {
        ExtremeVerdict::Indeterminate
    };
    Ok(ExtremeResult {
        verdict,
        ladder: ladder.to_vec(),
        integrals,
        ratios,
        near_unimodular_mass,
        panels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngularVerdict {
    Divergent,
    Finite { limit: f64 },
    /// Fewer than four quotients could be evaluated.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngularResult {
    pub verdict: AngularVerdict,
    /// `(r, J(r))` pairs.
    pub quotients: Vec<(f64, f64)>,
    /// Evaluation error that stopped the sequence early, if any.
    pub truncated: Option<String>,
}

/// Julia quotients `J(r) = (1 - ||theta(r) k||) / (1 - r)` of
/// `theta = V o b^{-1}` along `r = 1 - 2^{-m}`.
pub fn angular_derivative_probe(c: &CharFunction, k: &[Complex64], depth: u32) -> Result<AngularResult> {
    if k.len() != c.n() {
        return Err(Error::DimensionMismatch {
            left: c.n(),
            right: k.len(),
        });
    }
    let norm = k.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("direction must be a unit vector, has norm {norm}")));
    }
    let mut quotients = Vec::new();
    let mut truncated = None;
    for w in radial_sequence(RadialTarget::DiskOne, depth) {
        let r = w.re;
        let theta = blaschke_b_inverse(w).and_then(|z| c.eval(z));
        let theta = match theta {
            Ok(t) => t,
            Err(e) => {
                truncated = Some(e.to_string());
                break;
            }
        };
        let tk: f64 = (0..c.n())
            .map(|i| (0..c.n()).map(|j| theta[(i, j)] * k[j]).sum::<Complex64>().norm_sqr())
            .sum::<f64>()
            .sqrt();
        quotients.push((r, (1.0 - tk) / (1.0 - r)));
    }
    let m = quotients.len();
    let verdict = if m < 4 {
        AngularVerdict::Inconclusive
    } else if quotients[m - 1].1 >= 2.0 * quotients[m - 4].1 {
        AngularVerdict::Divergent
    } else {
        AngularVerdict::Finite {
            limit: 2.0 * quotients[m - 1].1 - quotients[m - 2].1,
        }
    };
    Ok(AngularResult {
        verdict,
        quotients,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfplane::{blaschke_b, make_grid, GridSpec};
    use crate::models::{normalized_gram_min_eigenvalue, DirectCharModel, FreeHalfLineModel, KernelModel, PaleyWienerModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pw() -> CharFunction {
        CharFunction::from_model(PaleyWienerModel::new(PI).unwrap()).unwrap()
    }

    fn b_theta() -> ContractiveFunction {
        ContractiveFunction::new(1, |z| Ok(CMatrix::scalar(blaschke_b(z)?)))
    }

    #[test]
    fn dbr_kernel_of_zero() {
        let t = ContractiveFunction::constant(CMatrix::zeros(1));
        let k = dbr_kernel_eval(&t, I, I).unwrap()[(0, 0)];
        assert!((k - 1.0 / (4.0 * PI)).norm() < 1e-15);
    }

    #[test]
    fn dbr_kernel_symmetry_and_gram() {
        let t = ContractiveFunction::from_char(&pw());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut pt = || c(rng.gen_range(-3.0..3.0), rng.gen_range(0.05..3.0));
        for _ in 0..10 {
            let (w, z) = (pt(), pt());
            let k = dbr_kernel_eval(&t, w, z).unwrap();
            let kt = dbr_kernel_eval(&t, z, w).unwrap();
            assert!((k.adjoint() - kt).frobenius_norm() < 1e-13);
        }
        let pts: Vec<Complex64> = (0..5).map(|_| pt()).collect();
        assert!(normalized_gram_min_eigenvalue(&pts, |l, z| dbr_kernel_eval(&t, l, z)).unwrap() >= -1e-8);
    }

    #[test]
    fn conjugation_kernel_values() {
        let t = ContractiveFunction::constant(CMatrix::scalar(c(0.3, 0.1)));
        assert_eq!(conj_kernel_eval(&t, I, c(1.0, 2.0)).unwrap()[(0, 0)], c(0.0, 0.0));

        let k = conj_kernel_eval(&b_theta(), I, c(0.0, 2.0)).unwrap()[(0, 0)];
        let expected = (1.0 / 3.0) / I / Complex64::new(0.0, 2.0 * PI);
        assert!((k - expected).norm() < 1e-15);

        // limit z -> lambda: b'(z) = 2i / (z + i)^2
        let l = c(0.4, 0.8);
        let k = conj_kernel_eval(&b_theta(), l, l).unwrap()[(0, 0)];
        let exact = 2.0 * I / ((l + I) * (l + I)) / Complex64::new(0.0, 2.0 * PI);
        assert!((k - exact).norm() < 1e-6 * exact.norm());
    }

    #[test]
    fn multipliers_for_closed_forms() {
        for model in [
            std::sync::Arc::new(PaleyWienerModel::new(PI).unwrap()) as std::sync::Arc<dyn KernelModel>,
            std::sync::Arc::new(FreeHalfLineModel),
        ] {
            let grid = make_grid(&GridSpec::upper().with_exclusions(&model.grid_exclusions())).unwrap();
            let f = CharFunction::build(model).unwrap();
            let r = multiplier_residuals(&f, &grid).unwrap();
            assert!(r.u.max <= 1e-8 && r.q.max <= 1e-8, "{r:?}");
            assert!(r.uq_minus_w <= 1e-8);
            let bad = multiplier_residuals_with(&f, &grid, QVariant::Printed).unwrap();
            assert!(bad.q.max > 1e-2);
        }
    }

    #[test]
    fn boundary_modulus_of_paley_wiener() {
        let xs: Vec<f64> = (0..=60).map(|k| -3.0 + 0.1 * k as f64).collect();
        for s in boundary_modulus(&pw(), &xs, 1e-4).unwrap() {
            assert!((1.0 - 1e-3..=1.0).contains(&s), "{s}");
        }
    }

    #[test]
    fn extreme_classifier() {
        let res = extreme_test(&pw(), 3.0, &EXTREME_LADDER, 1000).unwrap();
        assert_eq!(res.verdict, ExtremeVerdict::Extreme, "{res:?}");
        let half_b = CharFunction::from_model(DirectCharModel::polynomial(vec![CMatrix::scalar(c(0.5, 0.0))]).unwrap()).unwrap();
        let res = extreme_test(&half_b, 3.0, &EXTREME_LADDER, 1000).unwrap();
        assert_eq!(res.verdict, ExtremeVerdict::NonExtreme, "{res:?}");
    }

    #[test]
    fn angular_probe() {
        let disk_identity =
            CharFunction::from_model(DirectCharModel::polynomial(vec![CMatrix::identity(1)]).unwrap()).unwrap();
        let res = angular_derivative_probe(&disk_identity, &[c(1.0, 0.0)], 12).unwrap();
        match res.verdict {
            AngularVerdict::Finite { limit } => assert!((limit - 1.0).abs() < 1e-6, "{res:?}"),
            other => panic!("expected finite, got {other:?}"),
        }
        let res = angular_derivative_probe(&pw(), &[c(1.0, 0.0)], 12).unwrap();
        assert_eq!(res.verdict, AngularVerdict::Divergent, "{res:?}");
        assert!(res.truncated.is_some());
    }
}
