//! Subcommands. Each computes its records, writes them under `out`, and
//! returns the summary that also goes into the JSON sidecar.

pub mod convergence;
pub mod micro;
pub mod path;
pub mod point;
pub mod surface;

use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{config, CliError};
use crate::output::VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Point,
    Surface,
    Convergence,
    MaterialPath,
    Microstructure,
    ValidateConfig,
}

/// Validates `cfg` and runs `cmd` on a pool of `cfg.threads` workers.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Value, CliError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| config(format!("threads: {e}")))?;
    pool.install(|| match cmd {
        Command::Point => point::run(cfg),
        Command::Surface => surface::run(cfg),
        Command::Convergence => convergence::run(cfg),
        Command::MaterialPath => path::run(cfg),
        Command::Microstructure => micro::run(cfg),
        Command::ValidateConfig => Ok(json!({
            "version": VERSION,
            "config_hash": cfg.hash(),
            "config": cfg,
        })),
    })
}
