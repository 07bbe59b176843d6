//! Command-line front end: ensemble generation, column selection, error
//! sweeps, recovery-condition checks and the brute-force oracle.
//!
//! Exit codes: 0 success, 1 a checked condition failed, 2 bad input or data,
//! 3 a solver did not converge. Indices are 1-based on the command line and
//! in every output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::RunConfig;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONDITION_FAILED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<mfalloc_core::Error> for CliError {
    fn from(err: mfalloc_core::Error) -> Self {
        let code = match err {
            mfalloc_core::Error::SolverFailure { .. } => EXIT_SOLVER,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "mfalloc",
    version,
    about = "Multifidelity simulation allocation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Global seed; overrides the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path (a directory for `generate`, a file otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build low- and high-fidelity ensemble files for a model.
    Generate(GenerateArgs),
    /// Select columns from an ensemble file.
    Select(SelectArgs),
    /// Reconstruction errors for every selector and subset size.
    Sweep(SweepArgs),
    /// Check the recovery conditions for a hypothesized basis set.
    Verify(VerifyArgs),
    /// Optimal column subset by exhaustive search.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// burgers, pendulum or synthetic.
    #[arg(long)]
    pub model: Option<String>,
    /// Points per parameter axis, e.g. `20x20`.
    #[arg(long)]
    pub grid: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    pub file: PathBuf,
    /// rand, lev, qr, chol, lu or gomp.
    #[arg(long)]
    pub method: String,
    /// Number of columns.
    #[arg(short, long)]
    pub m: usize,
    /// GOMP stopping tolerance.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// GOMP sparsity parameter (unbounded when absent).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Leverage rank (defaults to m).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Scale columns to unit norm first.
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub low: PathBuf,
    pub high: PathBuf,
    /// Comma-separated selectors; overrides the config file.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Subset sizes: a list `1,2,5` or a range `1..20`.
    #[arg(long)]
    pub sizes: Option<String>,
    /// Seeds for the random selector.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Score every column rather than only the unselected ones.
    #[arg(long)]
    pub all_columns: bool,
    /// Also write a gnuplot table here.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    /// Comma-separated 1-based basis indices.
    #[arg(long, value_delimiter = ',', required = true)]
    pub basis: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub file: PathBuf,
    #[arg(short, long)]
    pub m: usize,
    #[command(flatten)]
    pub common: Common,
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Select(a) => commands::select(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Oracle(a) => commands::oracle(&a),
    }
}
