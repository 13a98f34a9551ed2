use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::halfplane::Exclusion;
use crate::linalg::CMatrix;

use super::KernelModel;

/// Finite sum of point masses on the real line with PSD matrix weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMeasure {
    /// Strictly increasing locations with their weights.
    pub atoms: Vec<(f64, CMatrix)>,
}

impl AtomicMeasure {
    /// Sorts by location and validates weights.
    pub fn new(mut atoms: Vec<(f64, CMatrix)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("atomic measure needs at least one atom".into()));
        }
        let n = atoms[0].1.n();
        for (x, w) in &atoms {
            if !x.is_finite() {
                return Err(Error::InvalidInput(format!("atom location {x} is not finite")));
            }
            if w.n() != n {
                return Err(Error::DimensionMismatch { left: n, right: w.n() });
            }
            let eig = w.hermitian_eigen()?;
            let top = eig.values.last().copied().unwrap_or(0.0).abs();
            if eig.values[0] < -1e-10 * top {
                return Err(Error::NotPsd {
                    min_eigenvalue: eig.values[0],
                });
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(Error::InvalidInput("atom locations must be distinct".into()));
        }
        Ok(AtomicMeasure { atoms })
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].1.n()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.0).collect()
    }

    pub fn total_mass(&self) -> CMatrix {
        self.atoms
            .iter()
            .fold(CMatrix::zeros(self.dim()), |acc, (_, w)| acc + *w)
    }

    /// `sum_j W_j / ((x_j - z)(x_j - conj(lambda)))`.
    pub fn cauchy_kernel(&self, lambda: Complex64, z: Complex64) -> CMatrix {
        self.atoms.iter().fold(CMatrix::zeros(self.dim()), |acc, (x, w)| {
            acc + w.scale(1.0 / ((*x - z) * (*x - lambda.conj())))
        })
    }
}

/// `K_lambda(z) = sum_j W_j / ((x_j - z)(x_j - conj(lambda)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasureModel {
    pub measure: AtomicMeasure,
}

impl AtomicMeasureModel {
    pub fn new(measure: AtomicMeasure) -> Self {
        AtomicMeasureModel { measure }
    }

    /// Scalar atoms `(location, weight)`.
    pub fn scalar(atoms: &[(f64, f64)]) -> Result<Self> {
        let atoms = atoms
            .iter()
            .map(|&(x, w)| (x, CMatrix::scalar(Complex64::new(w, 0.0))))
            .collect();
        Ok(Self::new(AtomicMeasure::new(atoms)?))
    }
}

impl KernelModel for AtomicMeasureModel {
    fn name(&self) -> String {
        format!("atomic({} atoms, n={})", self.measure.atoms.len(), self.measure.dim())
    }

    fn dim(&self) -> usize {
        self.measure.dim()
    }

    fn kernel(&self, lambda: Complex64, z: Complex64) -> Result<CMatrix> {
        Ok(self.measure.cauchy_kernel(lambda, z))
    }

    fn singular_set(&self) -> Vec<Exclusion> {
        self.measure
            .atoms
            .iter()
            .map(|(x, _)| Exclusion::Point(Complex64::new(*x, 0.0)))
            .collect()
    }

    fn boundary_evaluable(&self) -> bool {
        true
    }

    fn notes(&self) -> Vec<String> {
        vec![
            "measure has finite total mass, so the associated symmetric transformation is not densely defined; kernel and characteristic-function identities still apply".into(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom_at_i() {
        let m = AtomicMeasureModel::scalar(&[(0.0, 1.0)]).unwrap();
        let i = Complex64::new(0.0, 1.0);
        assert!((m.kernel(i, i).unwrap()[(0, 0)] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn sorts_and_validates() {
        let m = AtomicMeasureModel::scalar(&[(2.0, 1.0), (-1.0, 1.0), (0.0, 2.0)]).unwrap();
        assert_eq!(m.measure.locations(), vec![-1.0, 0.0, 2.0]);
        assert!(AtomicMeasureModel::scalar(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(AtomicMeasureModel::scalar(&[(0.0, -1.0)]).is_err());
    }
}
