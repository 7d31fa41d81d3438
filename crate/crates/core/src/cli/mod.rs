//! Command-line front end.
//!
//! Every command resolves its inputs into an [`Invocation`], executes it into
//! in-memory output files, writes them next to a `run.json` manifest that
//! records the resolved invocation and the SHA-256 digest of every output.

mod run;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::error::IsacError;
use crate::precoder::Family;
use crate::region::Metric;

pub use run::{execute, reproduce, write_run, Command, HeatmapOptions, Invocation, Manifest, Provenance, SweepOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Isac(#[from] IsacError),
    #[error("reproduced outputs differ from the manifest: {}", .0.join(", "))]
    DigestMismatch(Vec<String>),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Isac(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Isac(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::DigestMismatch(_) => 1,
            CliError::Isac(e) if e.is_numeric() => 3,
            CliError::Isac(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::DigestMismatch(_) => "digest_mismatch",
            CliError::Isac(e) if e.is_numeric() => "numeric",
            CliError::Isac(IsacError::Io(_)) => "io",
            CliError::Isac(_) => "config",
        }
    }

    /// Machine-readable error document.
    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() })
    }
}

#[derive(Debug, Parser)]
#[command(name = "rsma-isac", version, about = "RSMA/SDMA ISAC precoder simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario configuration JSON.
    #[arg(long, conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario (S1, S2 or S3); S1 when neither this nor --scenario is given.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override a configuration field, e.g. `--set n_subcarriers=64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Mrt,
    Zf,
    Both,
}

impl FamilyArg {
    pub fn families(self) -> Vec<Family> {
        match self {
            FamilyArg::Mrt => vec![Family::Mrt],
            FamilyArg::Zf => vec![Family::Zf],
            FamilyArg::Both => vec![Family::Mrt, Family::Zf],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    G0,
    Snr,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::G0 => Metric::G0,
            MetricArg::Snr => Metric::SnrRad,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Sweep the parameter grid and extract Pareto boundaries.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long, value_enum, default_value_t = FamilyArg::Both)]
        family: FamilyArg,
        #[arg(long, value_enum, default_value_t = MetricArg::G0)]
        metric: MetricArg,
        /// Monte Carlo trials per point for the SNR metric.
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Radar SNR per delay bin for each row of a boundary parameter table.
    RadarHeatmap {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// boundary_params.csv from a sweep.
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Target delays to evaluate.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        n0: Vec<usize>,
        /// Highest delay bin written to the heatmap.
        #[arg(long, default_value_t = 16)]
        max_bin: usize,
        /// Keep β fixed instead of halving it per additional delay bin.
        #[arg(long)]
        constant_beta: bool,
    },
    /// Evaluate one parameter point given through --set.
    PointEval {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Simulate RF-chain phase offsets and the anchor calibration.
    CalibrateDemo {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Per-subcarrier phase jitter standard deviation (rad).
        #[arg(long, default_value_t = 0.05)]
        jitter: f64,
    },
    /// Re-execute a run.json and compare output digests.
    Reproduce {
        manifest: PathBuf,
        /// Also write the reproduced outputs here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run::dispatch(cli.command) {
        Ok(stdout) => {
            if !stdout.is_empty() {
                let _ = writeln!(std::io::stdout(), "{stdout}");
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
