//! Sparse storage, banded direct factorizations, Krylov least squares and
//! small dense spectral utilities.

pub mod banded;
pub mod krylov;
pub mod operator;
pub mod scalar;
pub mod sparse;
pub mod spectral;

pub use banded::{factor_general, factor_hermitian, BandedLu, HermitianFactor};
pub use krylov::{cgls, pcg, KrylovResult};
pub use operator::{symmetric_operator, to_dense, FnOperator, LinearOperator, Stacked};
pub use scalar::Scalar;
pub use sparse::{SparseComplexMatrix, SparseMatrix, SparseRealMatrix};
pub use spectral::{dense_hermitian_eigenvalues, dense_symmetric_eigenvalues, power_iteration_largest, DEFAULT_DENSE_CAP};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    IndexOutOfBounds { row: usize, col: usize, rows: usize, cols: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("Cholesky breakdown: non-positive pivot in column {index}")]
    Breakdown { index: usize },
    #[error("singular matrix: zero pivot in column {index}")]
    Singular { index: usize },
    #[error("power iteration did not settle after {iterations} iterations (estimate {estimate:e})")]
    Stagnation { iterations: usize, estimate: f64 },
    #[error("dimension {dim} exceeds dense cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
}
