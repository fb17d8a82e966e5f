//! Command-line harness around the `gqre` library: game generation,
//! learning runs with reproducible seeds, equilibrium verification, single
//! quantal responses and the benchmark matrix.

pub mod commands;
pub mod config;
pub mod experiment;

pub use commands::{Cli, Command};
pub use config::ExperimentConfig;
pub use experiment::{Manifest, RunOptions};
