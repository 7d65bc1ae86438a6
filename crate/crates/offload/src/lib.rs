//! Experiment harness, file formats and command-line front end for the
//! `offload-core` schedulers.

pub mod bench;
pub mod cli;
pub mod config;
pub mod csv_io;
pub mod harness;
pub mod output;

pub use cli::{run_cli, run_cli_to};
pub use config::{CliConfig, ConfigError};
pub use harness::{
    aggregate, run_experiment, Algorithm, Experiment, Metric, ResultRow, ResultTable, RunRecord, Scenario,
};
