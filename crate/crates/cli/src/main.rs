//! `whittle-cache`: exact Whittle indices, index learning and cache
//! simulation from a JSON run configuration.

mod commands;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Algorithm, Overrides, PolicyName};

#[derive(Parser)]
#[command(name = "whittle-cache", version, about = "Whittle-index edge caching toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding `master_seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form index table for every content.
    Index {
        #[command(flatten)]
        common: Common,
    },
    /// Learn index tables; `--out` receives the final indices.
    Learn {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        algorithm: Option<Algorithm>,
        /// Epochs per threshold sweep.
        #[arg(long)]
        epochs: Option<u64>,
        /// Per-epoch telemetry CSV.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Compare caching policies over seeded episodes.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Repeat to list several policies.
        #[arg(long = "policy", value_enum)]
        policies: Vec<PolicyName>,
        /// Number of seeds per policy.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Final-index CSV for `whittle-learned`.
        #[arg(long)]
        index_file: Option<PathBuf>,
        /// Full per-episode metrics, including occupancy histograms.
        #[arg(long)]
        metrics_json: Option<PathBuf>,
    },
    /// Per-content request rates, or a synthetic request trace.
    Workload {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = WorkloadMode::Rates)]
        mode: WorkloadMode,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WorkloadMode {
    Rates,
    Trace,
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<whittle_core::Error> for Failure {
    fn from(e: whittle_core::Error) -> Self {
        Failure::runtime(e.to_string())
    }
}

/// Writes `bytes` to `path`, or to standard output.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| Failure::runtime(format!("cannot write to stdout: {e}"))),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Index { common } => {
            let cfg = config::load(
                &common.config,
                "index",
                Overrides {
                    seed: common.seed,
                    ..Default::default()
                },
            )?;
            commands::index(&cfg, common.out.as_deref())
        }
        Command::Learn {
            common,
            algorithm,
            epochs,
            trace_out,
        } => {
            let cfg = config::load(
                &common.config,
                "learn",
                Overrides {
                    seed: common.seed,
                    algorithm,
                    epochs,
                    ..Default::default()
                },
            )?;
            commands::learn(&cfg, common.out.as_deref(), trace_out.as_deref())
        }
        Command::Simulate {
            common,
            policies,
            seeds,
            horizon,
            index_file,
            metrics_json,
        } => {
            let cfg = config::load(
                &common.config,
                "simulate",
                Overrides {
                    seed: common.seed,
                    policies,
                    seeds,
                    horizon,
                    index_file,
                    ..Default::default()
                },
            )?;
            commands::simulate(&cfg, common.out.as_deref(), metrics_json.as_deref())
        }
        Command::Workload { common, mode } => {
            let cfg = config::load(
                &common.config,
                "workload",
                Overrides {
                    seed: common.seed,
                    ..Default::default()
                },
            )?;
            commands::workload(&cfg, mode, common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
