//! Dense and sparse linear algebra kernels and symmetric factorizations.

mod bunch_kaufman;
mod cholesky;
mod dense;
mod factor;
pub mod ordering;
mod sparse;
mod sparse_cholesky;
mod tridiagonal;
mod vector;

pub use bunch_kaufman::BunchKaufman;
pub use cholesky::DenseCholesky;
pub use dense::DenseMatrix;
pub use factor::{
    factor_dense_indefinite, factor_dense_spd, factor_spd, factor_spd_with_ordering,
    factor_symmetric_indefinite, Inertia, SymmetricFactorization, DENSE_CUTOFF,
};
pub use sparse::{SparseMatrix, TripletBuilder};
pub use sparse_cholesky::SparseCholesky;
pub use tridiagonal::symmetric_tridiagonal_extremes;
pub use vector::{axpy, dot, norm2, norm_inf, scale};

use thiserror::Error;

/// Relative pivot tolerance used to declare a factorization singular.
pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not positive definite (pivot {index} = {value:e})")]
    NotPositiveDefinite { index: usize, value: f64 },
    #[error("matrix is singular to working precision at pivot {index}")]
    SingularMatrix { index: usize },
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(&'static str),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

pub type Result<T> = core::result::Result<T, LinalgError>;

/// `DimensionMismatch` unless the lengths agree.
pub fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, found })
    }
}
