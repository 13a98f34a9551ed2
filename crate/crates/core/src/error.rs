use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix dimension {0} outside supported range 1..=4")]
    UnsupportedDimension(usize),

    #[error("singular matrix (condition estimate {cond:e})")]
    SingularMatrix { cond: f64 },

    #[error("matrix is not Hermitian (relative defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is too close to singular for an inverse square root (min eigenvalue {min_eigenvalue:e})")]
    NearSingular { min_eigenvalue: f64 },

    #[error("b(z) has a pole at z = -i")]
    PoleAtMinusI,

    #[error("b^-1(w) has a pole at w = 1")]
    PoleAtOne,

    #[error("grid is empty after exclusions")]
    EmptyGrid,

    #[error("point {point} outside the model domain: {reason}")]
    DomainViolation { point: Complex64, reason: String },

    #[error("no unique square-root branch maps {point} into the unit disk")]
    BranchAmbiguity { point: Complex64 },

    #[error("ODE step count too small: Richardson deviation {deviation:e}")]
    StepCountTooSmall { deviation: f64 },

    #[error("characteristic function near a pole at {point} (condition {cond:e})")]
    PoleProximity { point: Complex64, cond: f64 },

    #[error("degenerate spectrum at every probe pair")]
    DegenerateSpectrum,

    #[error("atomic fit residual {residual:e} exceeds threshold")]
    FitResidualTooLarge { residual: f64 },

    #[error("non-finite value encountered at {point}")]
    NonFinite { point: Complex64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("evaluation failed at lambda = {lambda}, z = {z}: {source}")]
    AtPoint {
        lambda: Complex64,
        z: Complex64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, lambda: Complex64, z: Complex64) -> Error {
        match self {
            e @ Error::AtPoint { .. } => e,
            e => Error::AtPoint {
                lambda,
                z,
                source: Box::new(e),
            },
        }
    }

    /// Strips any `AtPoint` wrapping.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_pole(&self) -> bool {
        matches!(
            self.root(),
            Error::PoleProximity { .. } | Error::PoleAtMinusI | Error::NonFinite { .. }
        )
    }
}
