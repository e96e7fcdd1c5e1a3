//! Command-line surface over the normal-ratio distribution: density
//! evaluation on points and grids, CDFs by three methods, seeded sampling,
//! model inspection, and a self-checking validation suite.
//!
//! Exit codes are a stable contract: 0 success, 1 validation verdict
//! negative, 2 usage or input error, 3 numerical failure.

mod cmds;
mod fmt;
mod model;

use clap::{Parser, Subcommand, ValueEnum};
use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, malformed files, inconsistent dimensions: exit 2.
    Usage(String),
    /// The computation itself failed (degenerate covariance, failed
    /// factorization, out-of-range probability): exit 3.
    Numeric(String),
    /// The reader went away (e.g. piped into `head`): quiet success.
    Pipe,
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Numeric(msg) => f.write_str(msg),
            CliError::Pipe => f.write_str("output pipe closed"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Numeric(_) => ExitCode::from(3),
            CliError::Pipe => ExitCode::SUCCESS,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CdfMethod {
    /// Single orthant probability of the linearized differences.
    Approx,
    /// Both denominator-sign orthants; exact up to the reported estimate.
    Exact,
    /// Empirical CDF of a fresh seeded sample.
    Mc,
}

#[derive(Parser, Debug)]
#[command(
    name = "normal-ratio",
    version,
    about = "Density, CDF, and sampling tools for ratios of jointly normal variables"
)]
pub struct Cli {
    /// JSON model file with exactly the keys mu (length p) and sigma (p x p)
    #[arg(long, global = true)]
    model: Option<PathBuf>,

    /// Seed for every randomized computation
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output format for grid and sample files
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write output to this path instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate the density (or log-density) at one point
    Density {
        /// Comma-separated ratio coordinates, p-1 of them
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Print the natural log of the density instead
        #[arg(long)]
        log: bool,
    },
    /// Tabulate the density on a regular grid (1- or 2-dimensional ratios)
    DensityGrid {
        /// Lower corner: one value per dimension, or one value for all
        #[arg(long, allow_hyphen_values = true)]
        lo: String,
        /// Upper corner: one value per dimension, or one value for all
        #[arg(long, allow_hyphen_values = true)]
        hi: String,
        /// Points per dimension (>= 2): one value per dimension, or one for all
        #[arg(long)]
        steps: String,
    },
    /// P(Y <= t) by linearized, exact, or Monte Carlo methods
    Cdf {
        /// Comma-separated thresholds, p-1 of them
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        #[arg(long, value_enum, default_value_t = CdfMethod::Exact)]
        method: CdfMethod,
        /// Lattice points per shift (approx/exact) or sample size (mc)
        #[arg(long)]
        n: Option<usize>,
    },
    /// Draw ratio samples to CSV or JSON
    Sample {
        /// Number of normal draws before denominator-sign redraws
        #[arg(long)]
        n: usize,
    },
    /// Cross-check the closed form against quadrature and sampling oracles
    Validate {
        /// Number of random density cases
        #[arg(long, default_value_t = 50)]
        cases: usize,
        /// Relative error threshold each density case must meet
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Emit a machine-readable JSON report instead of the table
        #[arg(long)]
        json: bool,
    },
    /// Print the parsed model and its derived quantities
    ModelInfo {
        /// Emit JSON instead of the human-readable summary
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    match &cli.cmd {
        Cmd::Density { point, log } => cmds::density_cmd(cli, point, *log),
        Cmd::DensityGrid { lo, hi, steps } => cmds::density_grid(cli, lo, hi, steps),
        Cmd::Cdf { t, method, n } => cmds::cdf(cli, t, *method, *n),
        Cmd::Sample { n } => cmds::sample(cli, *n),
        Cmd::Validate { cases, tol, json } => cmds::validate(cli, *cases, *tol, *json),
        Cmd::ModelInfo { json } => cmds::model_info(cli, *json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(CliError::Pipe) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
