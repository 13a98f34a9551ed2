//! Characteristic functions of simple symmetric operators with equal
//! deficiency indices, computed from reproducing-kernel data.
//!
//! A kernel model supplies `K_lambda(z)` on `C \ R` (or part of it). From it
//! [`livsic::CharFunction`] builds the normalized kernel columns `Phi`, `Psi`
//! at `i` and `-i` and the characteristic function `V = b Phi^{-1} Psi`.
//! The remaining modules check the identities that `V` has to satisfy and
//! classify it.

pub mod cli;
pub mod dbr;
pub mod error;
pub mod herglotz;
pub mod halfplane;
pub mod linalg;
pub mod livsic;
pub mod models;
pub mod quadrature;
pub mod report;

pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use livsic::CharFunction;
