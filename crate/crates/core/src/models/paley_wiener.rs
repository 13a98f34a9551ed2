use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::halfplane::Exclusion;
use crate::linalg::CMatrix;

use super::KernelModel;

/// Fourier transforms of `L^2[-L, L]`: `K_lambda(z) = 2 sin(L(z - conj(lambda))) / (z - conj(lambda))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaleyWienerModel {
    pub half_length: f64,
}

const SERIES_RADIUS: f64 = 1e-6;

/// Characteristic-function zeros and poles sit at `k pi / L +- i`; exclusions
/// are listed out to this distance from the origin.
const EXCLUSION_REACH: f64 = 100.0;

impl PaleyWienerModel {
    pub fn new(half_length: f64) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidInput(format!(
                "half_length must be positive and finite, got {half_length}"
            )));
        }
        Ok(PaleyWienerModel { half_length })
    }

    pub fn scalar_kernel(&self, lambda: Complex64, z: Complex64) -> Complex64 {
        let l = self.half_length;
        let w = z - lambda.conj();
        if w.norm() < SERIES_RADIUS {
            let t = (w * l) * (w * l);
            return (1.0 - t / 6.0 + t * t / 120.0 - t * t * t / 5040.0) * (2.0 * l);
        }
        (w * l).sin() * 2.0 / w
    }
}

impl KernelModel for PaleyWienerModel {
    fn name(&self) -> String {
        format!("paley_wiener(L={})", self.half_length)
    }

    fn dim(&self) -> usize {
        1
    }

    fn kernel(&self, lambda: Complex64, z: Complex64) -> Result<CMatrix> {
        let k = self.scalar_kernel(lambda, z);
        if !k.is_finite() {
            return Err(Error::NonFinite { point: z });
        }
        Ok(CMatrix::scalar(k))
    }

    fn grid_exclusions(&self) -> Vec<Exclusion> {
        let step = std::f64::consts::PI / self.half_length;
        let reach = (EXCLUSION_REACH / step).ceil() as i64;
        let mut out = Vec::new();
        for k in (-reach..=reach).filter(|&k| k != 0) {
            let x = k as f64 * step;
            out.push(Exclusion::Point(Complex64::new(x, 1.0)));
            out.push(Exclusion::Point(Complex64::new(x, -1.0)));
        }
        out
    }

    fn boundary_evaluable(&self) -> bool {
        true
    }

    fn notes(&self) -> Vec<String> {
        vec![format!(
            "K_i(i) = sinh(2L) = {:.12e} from the defining integral over [-L, L]; the value sinh(L) occasionally quoted for L = pi does not satisfy it",
            (2.0 * self.half_length).sinh()
        )]
    }
}
