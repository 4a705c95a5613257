//! Experiment driver for the `nchain` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod eval;

pub use config::{EvaluationConfig, ReferenceConfig, RunConfig};
pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_NUMERICAL};
