//! Simulation harness: configuration, replication sweeps and CSV output.

pub mod config;
pub mod records;
pub mod runner;

pub use config::{resolve, ConfigError, ExperimentConfig};
pub use runner::{run, run_consistency, run_convergence, run_replications};
