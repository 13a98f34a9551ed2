use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::halfplane::blaschke_b;
use crate::herglotz::{cayley_omega, herglotz_kernel_from};
use crate::linalg::CMatrix;
use crate::livsic::CharFunction;

use super::KernelModel;

type VFn = Arc<dyn Fn(Complex64) -> Result<CMatrix> + Send + Sync>;

/// A contractive function on the upper half-plane, given explicitly.
#[derive(Clone)]
pub enum DirectV {
    /// `sum_k M_k b(z)^k`, `k = 1, 2, ...` (`coefficients[0]` multiplies `b`).
    Polynomial(Vec<CMatrix>),
    /// `L V_src(z) R` for another characteristic function.
    Transform {
        left: CMatrix,
        source: CharFunction,
        right: CMatrix,
    },
    Custom { n: usize, f: VFn },
}

impl fmt::Debug for DirectV {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectV::Polynomial(cs) => f.debug_tuple("Polynomial").field(cs).finish(),
            DirectV::Transform { left, source, right } => f
                .debug_struct("Transform")
                .field("left", left)
                .field("source", &source.model().name())
                .field("right", right)
                .finish(),
            DirectV::Custom { n, .. } => write!(f, "Custom(n={n})"),
        }
    }
}

impl DirectV {
    pub fn dim(&self) -> usize {
        match self {
            DirectV::Polynomial(cs) => cs[0].n(),
            DirectV::Transform { left, .. } => left.n(),
            DirectV::Custom { n, .. } => *n,
        }
    }

    /// `V(z)` for `z` in the upper half-plane.
    pub fn eval(&self, z: Complex64) -> Result<CMatrix> {
        if !(z.im > 0.0) {
            return Err(Error::DomainViolation {
                point: z,
                reason: "an explicit characteristic function is given on the upper half-plane only".into(),
            });
        }
        match self {
            DirectV::Polynomial(cs) => {
                let b = blaschke_b(z)?;
                let mut power = b;
                let mut acc = CMatrix::zeros(cs[0].n());
                for m in cs {
                    acc = acc + m.scale(power);
                    power *= b;
                }
                Ok(acc)
            }
            DirectV::Transform { left, source, right } => Ok(*left * source.eval(z)? * *right),
            DirectV::Custom { f, .. } => f(z),
        }
    }
}

/// Kernel model whose characteristic function is a prescribed `V`.
///
/// The kernel is the Herglotz kernel
/// `(Omega(z) + Omega(lambda)*) / (pi i (conj(lambda) - z))` with
/// `Omega = (I + V)(I - V)^{-1}` on the upper half-plane and
/// `Omega(z) = -Omega(conj(z))*` below it. With this normalization the
/// factorization engine returns `V` itself.
#[derive(Debug, Clone)]
pub struct DirectCharModel {
    pub v: DirectV,
    pub label: String,
}

impl DirectCharModel {
    pub fn new(v: DirectV, label: impl Into<String>) -> Result<Self> {
        let n = v.dim();
        match &v {
            DirectV::Polynomial(cs) if cs.iter().any(|m| m.n() != n) => {
                return Err(Error::InvalidInput("polynomial coefficients differ in dimension".into()));
            }
            DirectV::Transform { left, source, right } if right.n() != n || source.n() != n => {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: if right.n() != n { right.n() } else { source.n() },
                });
            }
            _ => {}
        }
        let at_i = v.eval(Complex64::new(0.0, 1.0))?;
        if at_i.frobenius_norm() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "V(i) must vanish, got norm {:.3e}",
                at_i.frobenius_norm()
            )));
        }
        Ok(DirectCharModel { v, label: label.into() })
    }

    /// `V = sum_k M_k b^k`.
    pub fn polynomial(coefficients: Vec<CMatrix>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidInput("polynomial needs at least one coefficient".into()));
        }
        Self::new(DirectV::Polynomial(coefficients), "direct(polynomial in b)")
    }

    /// `V = L V_src R`.
    pub fn transform(left: CMatrix, source: CharFunction, right: CMatrix) -> Result<Self> {
        let label = format!("direct(L * V[{}] * R)", source.model().name());
        Self::new(DirectV::Transform { left, source, right }, label)
    }

    fn omega(&self, z: Complex64) -> Result<CMatrix> {
        if z.im > 0.0 {
            cayley_omega(&self.v.eval(z)?, z)
        } else {
            Ok(-cayley_omega(&self.v.eval(z.conj())?, z.conj())?.adjoint())
        }
    }
}

impl KernelModel for DirectCharModel {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn dim(&self) -> usize {
        self.v.dim()
    }

    fn kernel(&self, lambda: Complex64, z: Complex64) -> Result<CMatrix> {
        herglotz_kernel_from(|w| self.omega(w), lambda, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_function_gives_constant_kernel() {
        let m = DirectCharModel::polynomial(vec![CMatrix::zeros(1)]).unwrap();
        let i = c(0.0, 1.0);
        let k = m.kernel(i, i).unwrap()[(0, 0)];
        assert!((k - 1.0 / std::f64::consts::PI).norm() < 1e-15);
    }

    #[test]
    fn rejects_nonzero_value_at_i() {
        let f: VFn = Arc::new(|_| Ok(CMatrix::scalar(c(0.5, 0.0))));
        assert!(DirectCharModel::new(DirectV::Custom { n: 1, f }, "const").is_err());
    }

    #[test]
    fn kernel_is_hermitian_symmetric_across_half_planes() {
        let m = DirectCharModel::polynomial(vec![CMatrix::scalar(c(0.3, 0.1)), CMatrix::scalar(c(0.0, 0.4))]).unwrap();
        for (l, z) in [(c(0.2, 1.0), c(-1.0, 0.3)), (c(0.5, -0.7), c(1.0, 2.0)), (c(0.5, 0.7), c(0.5, -0.7))] {
            let k = m.kernel(l, z).unwrap();
            let kt = m.kernel(z, l).unwrap();
            assert!((k.adjoint() - kt).frobenius_norm() < 1e-12 * k.frobenius_norm().max(1.0));
        }
    }
}
