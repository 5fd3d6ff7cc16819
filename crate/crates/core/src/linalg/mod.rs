//! Symmetric positive-definite linear algebra: CSR storage, plain conjugate
//! gradient, a dense LU oracle, and extreme-eigenvalue estimates used to size
//! CG iteration budgets.

mod budget;
mod cg;
mod dense;
mod eigen;
mod sparse;

pub use budget::{cg_budget_delalleau, cg_budget_harmonic};
pub use cg::{cg_solve, CgReport};
pub use dense::{direct_solve, DenseMatrix, LuFactors};
pub use eigen::{estimate_eigen_extremes, EigenEstimate};
pub use sparse::SparseSymMatrix;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("non-positive curvature pᵀAp = {curvature:e} at CG iteration {iteration}")]
    Indefinite {
        iteration: usize,
        curvature: f64,
        iterate: Vec<f64>,
    },
    #[error("matrix is singular (pivot {pivot:e} in column {column})")]
    Singular { column: usize, pivot: f64 },
}

/// A symmetric linear map `y = A x`.
pub trait SymOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
