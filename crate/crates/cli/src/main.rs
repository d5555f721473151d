//! `linear-treeshap`: explain rows of a CSV file, cross-check the explainer
//! against its oracles, or time it against the quadratic reference.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error, 3 check failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod bench;
mod check;
mod explain;

#[derive(Debug, Parser)]
#[command(name = "linear-treeshap", version, about = "Exact Shapley values for decision-tree models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one attribution row per data row.
    Explain(ExplainArgs),
    /// Compare all four implementations on a model or on random trees.
    Check(CheckArgs),
    /// Time the linear explainer against the quadratic reference by depth.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Data file: CSV, one instance per row, optional header.
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    /// Clamp split weights of exactly 0 or 1 instead of rejecting the model.
    #[arg(long)]
    pub lenient_weights: bool,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["model", "random_trees"]))]
pub struct CheckArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of random single-tree models to check.
    #[arg(long, requires = "max_depth")]
    pub random_trees: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Feature count upper bound for random trees.
    #[arg(long, default_value_t = 10)]
    pub max_features: usize,
    /// Largest accepted deviation `|a - b| / (1 + max(|a|, |b|))`; must be positive.
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instances per model.
    #[arg(long, default_value_t = 5)]
    pub instances: usize,
    #[arg(long)]
    pub lenient_weights: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated tree depths.
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 6, 8, 10, 12, 14, 16, 18])]
    pub depths: Vec<usize>,
    /// Leaf target per tree (capped at 2^depth).
    #[arg(long, default_value_t = 64)]
    pub leaves: usize,
    /// Repetitions per depth, each on a fresh tree.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub reps: u32,
    /// Instances timed per repetition.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
    pub samples: u32,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..))]
    pub num_features: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV with one row per depth.
    #[arg(long)]
    pub output: PathBuf,
}

/// Why a command did not succeed; each variant has its own exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Validation(String),
    CheckFailed,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::CheckFailed => 3,
        }
    }
}

impl From<linear_treeshap::Error> for Failure {
    fn from(e: linear_treeshap::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

pub fn io_failure(path: &std::path::Path, e: impl std::fmt::Display) -> Failure {
    Failure::Validation(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Explain(a) => explain::run(&a),
        Command::Check(a) => check::run(&a),
        Command::Bench(a) => bench::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("usage error: {m}"),
                Failure::Validation(m) => eprintln!("error: {m}"),
                Failure::CheckFailed => {}
            }
            ExitCode::from(f.code())
        }
    }
}
