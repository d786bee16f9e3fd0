//! Synthetic studies for the `penopt` solvers: data generation on a fine
//! grid, noise, inversions, misfit landscapes, spectral tables and error
//! bound reports. The `penopt` binary wraps [`pipeline`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrays;
pub mod config;
pub mod error;
pub mod landscape;
pub mod noise;
pub mod pipeline;
pub mod records;
pub mod report;
pub mod resample;
pub mod setup;
pub mod spectra;

pub use config::ExperimentConfig;
pub use error::{ExpError, Result};
