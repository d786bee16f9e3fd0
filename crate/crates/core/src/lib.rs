//! Reduced, quadratic-penalty and all-at-once solvers for PDE-constrained
//! inverse problems.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: sparse storage, banded factorizations, CGLS/CG, spectra.
//! - [`models`]: forward operators `A(m)`, their Jacobians and sampling.
//! - [`augmented`]: state/adjoint solves for both formulations.
//! - [`objectives`]: reduced, penalty and equation-error functionals.
//! - [`optim`]: Gauss-Newton, L-BFGS, all-at-once Newton, λ control.
//!
//! Per-experiment work runs on rayon when the `parallel` feature is on
//! (default) and sequentially otherwise; reductions are always performed in
//! experiment order so both builds give bitwise-identical results.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod augmented;
pub mod exec;
pub mod linalg;
pub mod models;
pub mod objectives;
pub mod optim;

pub use num_complex::Complex64;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension { what: &'static str, got: usize, expected: usize },
    #[error("location {0:?} lies outside the grid")]
    OutOfDomain(Vec<f64>),
    #[error("penalty parameter must be positive, got {0}")]
    InvalidLambda(f64),
    #[error("degenerate penalty scaling: largest eigenvalue of the data operator is zero")]
    DegenerateScaling,
    #[error("{0}")]
    Config(String),
    #[error("line search: {0}")]
    LineSearch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::Dimension { what, got, expected })
    }
}
