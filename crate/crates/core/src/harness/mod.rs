//! Experiment orchestration: configuration files, the jump-length
//! convergence study, identity checks, particle and solver comparisons and
//! their CSV output.

mod config;
mod experiments;
pub mod report;

pub use config::{Case, ExperimentConfig};
pub use experiments::*;
