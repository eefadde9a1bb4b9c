//! Numerical laboratory for sub-diffusion arising from an age-structured
//! renewal process with spatial jumps.
//!
//! * [`model`]: escape-rate laws, jump kernels, initial data.
//! * [`laplace`]: Laplace transforms and the transform identities.
//! * [`age`]: deterministic age-structured solvers.
//! * [`ctrw`]: particle Monte Carlo of the microscopic process.
//! * [`fracpde`]: macroscopic diffusion and sub-diffusion solvers.
//! * [`harness`]: configuration, experiment drivers and CSV output.

pub mod age;
pub mod ctrw;
pub mod error;
pub mod fracpde;
pub mod harness;
pub mod laplace;
pub mod model;
mod par;
pub mod quad;

pub use error::{Error, Result};
