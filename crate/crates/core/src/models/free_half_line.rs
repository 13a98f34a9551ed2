use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

use super::KernelModel;

/// Square root of a nonreal `w` with positive imaginary part.
pub fn sigma(w: Complex64) -> Complex64 {
    let s = w.sqrt();
    if s.im > 0.0 {
        s
    } else {
        -s
    }
}

/// Free second-derivative operator on the half-line:
/// `K_lambda(z) = i / (sigma(conj(lambda)) - conj(sigma(conj(z))))`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FreeHalfLineModel;

impl FreeHalfLineModel {
    pub fn scalar_kernel(lambda: Complex64, z: Complex64) -> Complex64 {
        Complex64::new(0.0, 1.0) / (sigma(lambda.conj()) - sigma(z.conj()).conj())
    }
}

impl KernelModel for FreeHalfLineModel {
    fn name(&self) -> String {
        "free_half_line".into()
    }

    fn dim(&self) -> usize {
        1
    }

    fn kernel(&self, lambda: Complex64, z: Complex64) -> Result<CMatrix> {
        let k = Self::scalar_kernel(lambda, z);
        if !k.is_finite() {
            return Err(Error::NonFinite { point: z });
        }
        Ok(CMatrix::scalar(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn anchor_values() {
        let i = Complex64::new(0.0, 1.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((FreeHalfLineModel::scalar_kernel(i, i) - r).norm() < 1e-15);
        assert!((FreeHalfLineModel::scalar_kernel(-i, -i) - r).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn branch_has_positive_imaginary_part(re in -10.0..10.0f64, im in 1e-6..10.0f64, up in any::<bool>()) {
            let w = Complex64::new(re, if up { im } else { -im });
            let s = sigma(w);
            prop_assert!(s.im > 0.0);
            prop_assert!((s * s - w).norm() <= 1e-12 * w.norm().max(1.0));
        }
    }
}
