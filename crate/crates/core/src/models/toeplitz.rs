use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::halfplane::Exclusion;
use crate::linalg::CMatrix;

use super::KernelModel;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Disk automorphism `phi(w) = e^{i theta} (w - alpha) / (1 - conj(alpha) w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskAutomorphism {
    pub theta: f64,
    pub alpha: Complex64,
}

impl DiskAutomorphism {
    pub fn new(theta: f64, alpha: Complex64) -> Result<Self> {
        if !(alpha.norm() < 1.0) || !theta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "automorphism needs |alpha| < 1 and finite theta, got alpha = {alpha}"
            )));
        }
        Ok(DiskAutomorphism { theta, alpha })
    }

    pub fn apply(&self, w: Complex64) -> Complex64 {
        Complex64::from_polar(1.0, self.theta) * (w - self.alpha) / (1.0 - self.alpha.conj() * w)
    }

    pub fn inverse(&self, u: Complex64) -> Complex64 {
        let e = Complex64::from_polar(1.0, -self.theta);
        (e * u + self.alpha) / (1.0 + self.alpha.conj() * e * u)
    }
}

/// Co-analytic Toeplitz operator with symbol
/// `g(w) = i (q(w) + w) / (q(w) - w)`, `q(w) = (w - a) / (1 - a w)`, `0 < a < 1`.
///
/// `g` maps the disk onto the plane slit along `|x| >= sqrt(1 - a^2) / a`. The
/// kernel is the Szegő kernel pulled back through `g^{-1}`, optionally after
/// pre-composing `g` with a disk automorphism `phi` (then `g^{-1}` becomes
/// `phi^{-1} o g^{-1}`). The square variant is the 2x2 kernel of the symbol
/// `g^2`, assembled from both square roots of `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToeplitzSlitModel {
    pub a: f64,
    pub automorphism: Option<DiskAutomorphism>,
    pub square: bool,
}

impl ToeplitzSlitModel {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidInput(format!("parameter a must lie in (0, 1), got {a}")));
        }
        Ok(ToeplitzSlitModel {
            a,
            automorphism: None,
            square: false,
        })
    }

    pub fn with_automorphism(mut self, phi: DiskAutomorphism) -> Self {
        self.automorphism = Some(phi);
        self
    }

    pub fn squared(mut self) -> Self {
        self.square = true;
        self
    }

    /// Half-width `c` of the gap between the slits.
    pub fn slit_edge(&self) -> f64 {
        (1.0 - self.a * self.a).sqrt() / self.a
    }

    /// The symbol `g` (without automorphism).
    pub fn g(&self, w: Complex64) -> Complex64 {
        let q = (w - self.a) / (1.0 - w * self.a);
        I * (q + w) / (q - w)
    }

    /// Both roots of `g(w) = z`, written in the rationalized form
    /// `a (i - z) / (i -+ s)`, `s^2 = a^2 (z^2 + 1) - 1`, which stays regular
    /// at `z = +-i`.
    fn candidates(&self, z: Complex64) -> [Complex64; 2] {
        let s = ((z * z + 1.0) * (self.a * self.a) - 1.0).sqrt();
        let num = (I - z) * self.a;
        [num / (I + s), num / (I - s)]
    }

    /// `g^{-1}(z)`: the root of `g(w) = z` inside the unit disk.
    pub fn g_inverse(&self, z: Complex64) -> Result<Complex64> {
        let inside: Vec<Complex64> = self
            .candidates(z)
            .into_iter()
            .filter(|w| w.is_finite() && w.norm() < 1.0)
            .collect();
        match inside.as_slice() {
            [w] => Ok(*w),
            _ => Err(Error::BranchAmbiguity { point: z }),
        }
    }

    /// `g^{-1}` followed by the inverse automorphism, if any.
    pub fn disk_point(&self, z: Complex64) -> Result<Complex64> {
        let w = self.g_inverse(z)?;
        Ok(match self.automorphism {
            Some(phi) => phi.inverse(w),
            None => w,
        })
    }

    fn szego(u: Complex64, v: Complex64) -> Complex64 {
        1.0 / (1.0 - u.conj() * v)
    }
}

impl KernelModel for ToeplitzSlitModel {
    fn name(&self) -> String {
        let mut name = format!("toeplitz_slit(a={})", self.a);
        if let Some(phi) = self.automorphism {
            name.push_str(&format!(", automorphism(theta={}, alpha={})", phi.theta, phi.alpha));
        }
        if self.square {
            name.push_str(", square");
        }
        name
    }

    fn dim(&self) -> usize {
        if self.square {
            2
        } else {
            1
        }
    }

    fn kernel(&self, lambda: Complex64, z: Complex64) -> Result<CMatrix> {
        if !self.square {
            let gl = self.disk_point(lambda)?;
            let gz = self.disk_point(z)?;
            return Ok(CMatrix::scalar(Self::szego(gl, gz)));
        }
        let rl = lambda.sqrt();
        let rz = z.sqrt();
        let gl = [self.disk_point(rl)?, self.disk_point(-rl)?];
        let gz = [self.disk_point(rz)?, self.disk_point(-rz)?];
        Ok(CMatrix::from_fn(2, |j, k| Self::szego(gl[k], gz[j])))
    }

    fn singular_set(&self) -> Vec<Exclusion> {
        let c = self.slit_edge();
        if self.square {
            vec![Exclusion::Interval {
                lo: c * c,
                hi: f64::INFINITY,
            }]
        } else {
            vec![
                Exclusion::Interval {
                    lo: f64::NEG_INFINITY,
                    hi: -c,
                },
                Exclusion::Interval {
                    lo: c,
                    hi: f64::INFINITY,
                },
            ]
        }
    }

    fn boundary_evaluable(&self) -> bool {
        true
    }
}
