//! Detection of correlated tail behaviour in benchmark-rate submissions.
//!
//! The pipeline runs panel ingestion, OLS detrending against the benchmark
//! (optionally with a credit proxy), discrete Wigner-Ville arrays of the
//! residuals, tail aliasing, and pairwise correlation of the aliased arrays.
//! Supporting pieces cover a synthetic trimmed-mean fixing simulator with
//! null models, continuous phase-space Wigner functions, and an explicit
//! solver for Wigner dynamics of diffusion generators.

pub mod alias;
pub mod cli;
pub mod detrend;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod fixing;
pub mod pair;
pub mod panel;
pub mod phase_space;
pub mod rng;
pub mod wvf;

pub use error::{Error, Result};
