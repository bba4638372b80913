//! Command-line front end: configs in, CSV/JSON/SVG artifacts out.
//!
//! Exit codes: 0 success, 1 run failure, 2 config or validation error,
//! 3 I/O error. Failures also print a one-line JSON record on stderr.

mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

pub use config::ExperimentConfig;
pub use output::{Manifest, ResultRow};
pub use plot::{emit_svg_plot, PlotStyle, Series};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("config error at {key}: {message}")]
    Config { key: String, message: String },
    #[error("invalid value for {key}: {message}")]
    Validation { key: String, message: String },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(_) => 1,
            CliError::Config { .. } | CliError::Validation { .. } => 2,
            CliError::Io { .. } => 3,
        }
    }

    /// Machine-readable error record.
    pub fn record(&self) -> serde_json::Value {
        match self {
            CliError::Config { key, message } => {
                json!({"error": "config", "key": key, "message": message})
            }
            CliError::Validation { key, message } => {
                json!({"error": "validation", "key": key, "message": message})
            }
            CliError::Io { path, message } => json!({"error": "io", "path": path, "message": message}),
            CliError::Run(message) => json!({"error": "run", "message": message}),
        }
    }
}

impl From<crate::ensemble::EnsembleError> for CliError {
    fn from(e: crate::ensemble::EnsembleError) -> Self {
        use crate::ensemble::EnsembleError as E;
        match e {
            E::TooManyFailures { .. } => CliError::Run(e.to_string()),
            other => CliError::Validation {
                key: "config".into(),
                message: other.to_string(),
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ddgate", version, about = "Dynamical decoupling of a two-qubit gate under classical noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON experiment config or a previous run manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config value, e.g. `--set noise.sigma1=5e8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory (else config, else $DDGATE_OUTPUT_DIR, else ./ddgate-out).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean gate error against the number of pulse pairs.
    ErrorVsN {
        #[command(flatten)]
        common: CommonArgs,
        /// Also dump schedule, noise paths and trace of this trajectory.
        #[arg(long)]
        dump_trajectory: Option<usize>,
    },
    /// Error against n for each UV cutoff in `sweep.gamma_max_list`.
    CutoffSweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Error against the noise scale on both qubits.
    SigmaSweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Error against the coupling ω_c.
    CouplingSweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Ensemble PSD of the qubit-1 noise against its reference spectrum.
    SpectrumCheck {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Closed-form PDD predictions and scaling templates.
    Analytic {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Power-law fits of a results CSV.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Results CSV (default: results.csv in the output directory).
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

/// Parses arguments, runs, reports; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    }
}
