//! Numerical toolkit for increment functionals of mean-zero Gaussian
//! processes with stationary increments.
//!
//! The crate simulates such processes on uniform grids, expands test
//! functions of normalized increments in Hermite polynomials, builds the
//! Wick-power chaos functionals those expansions converge to, and checks
//! the limit behaviour against deterministic kernel oracles.

pub mod error;
pub mod functionals;
pub mod harness;
pub mod hermite;
pub mod models;
pub mod pathgen;
pub mod quad;

pub use error::{Error, Result};
