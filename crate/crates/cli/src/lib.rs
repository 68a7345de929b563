//! Experiment harness around `hroc-core`: configuration, model registry,
//! subcommands and their CSV/JSON outputs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod model;
pub mod output;

pub use commands::{run, Command};
pub use config::{ExperimentConfig, ModelName, Overrides};
pub use error::CliError;
