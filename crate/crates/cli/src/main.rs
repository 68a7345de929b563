use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hroc_cli::{run, CliError, Command, ExperimentConfig, ModelName, Overrides};

#[derive(Parser)]
#[command(name = "hroc", version, about = "Rank-one convex envelopes of nonconvex energies")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

/// Flags shared by every subcommand; each overrides the config document.
#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    model: Option<ModelName>,
    /// Space dimension (3 only for multiwell)
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Samples per rank-one line
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// Bounding box radius
    #[arg(long, global = true)]
    r: Option<f64>,
    /// Maximal lamination depth
    #[arg(long, global = true)]
    kmax: Option<usize>,
    /// Rotations for the averaged stress
    #[arg(long, global = true)]
    nrot: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Sub {
    /// Envelope, stress, tangent and tree at one F
    Point {
        /// F in row-major order, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        f: Option<Vec<f64>>,
    },
    /// Envelope on a plane of two components
    Surface {
        /// Grid step on both axes
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Error and wall time against N
    Convergence {
        /// Sample counts to study, comma separated
        #[arg(long, value_delimiter = ',')]
        n_values: Option<Vec<usize>>,
        /// F in row-major order, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        f: Option<Vec<f64>>,
    },
    /// Biaxial path F = diag(t, t) with rotational averaging
    MaterialPath {
        /// End of the stretch range, starting at 1
        #[arg(long)]
        t_max: Option<f64>,
        /// Number of increments
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Laminate field and periodic displacement at one point
    Microstructure {
        /// Evaluate at F = diag(t, t)
        #[arg(long)]
        t: Option<f64>,
        /// Grid cells per side
        #[arg(long)]
        m: Option<usize>,
        /// Root oscillation length; defaults to one period along the split normal
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Parse, merge and check the configuration, then print it
    ValidateConfig,
}

fn rows(entries: Vec<f64>) -> Result<Vec<Vec<f64>>, CliError> {
    let d = (entries.len() as f64).sqrt().round() as usize;
    if d * d != entries.len() || d == 0 {
        return Err(CliError::Config(format!(
            "--f needs d*d entries, got {}",
            entries.len()
        )));
    }
    Ok(entries.chunks(d).map(<[f64]>::to_vec).collect())
}

fn configure(cli: Cli) -> Result<(Command, ExperimentConfig), CliError> {
    let c = cli.common;
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        model: c.model,
        dim: c.dim,
        n: c.n,
        r: c.r,
        k_max: c.kmax,
        n_rot: c.nrot,
        out: c.out,
        threads: c.threads,
    });
    let cmd = match cli.command {
        Sub::Point { f } => {
            if let Some(f) = f {
                cfg.point.f = Some(rows(f)?);
            }
            Command::Point
        }
        Sub::Surface { delta } => {
            if let Some(d) = delta {
                cfg.surface.delta = d;
            }
            Command::Surface
        }
        Sub::Convergence { n_values, f } => {
            if let Some(n) = n_values {
                cfg.convergence.n_values = n;
            }
            if let Some(f) = f {
                cfg.convergence.f = Some(rows(f)?);
            }
            Command::Convergence
        }
        Sub::MaterialPath { t_max, steps } => {
            if let Some(t) = t_max {
                cfg.material_path.t_max = t;
            }
            if let Some(s) = steps {
                cfg.material_path.steps = s;
            }
            Command::MaterialPath
        }
        Sub::Microstructure { t, m, epsilon } => {
            let ms = &mut cfg.microstructure;
            if let Some(t) = t {
                ms.t = t;
            }
            if let Some(m) = m {
                ms.m = m;
            }
            if epsilon.is_some() {
                ms.epsilon = epsilon;
            }
            Command::Microstructure
        }
        Sub::ValidateConfig => Command::ValidateConfig,
    };
    Ok((cmd, cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure(cli).and_then(|(cmd, cfg)| run(cmd, &cfg));
    match result {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hroc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
