//! Experiment driver behind the `dynbc` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{run, Command, Outcome};
pub use config::{parse_config, parse_config_str, RunConfig};
pub use error::CliError;
