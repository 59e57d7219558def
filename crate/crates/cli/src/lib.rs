//! Experiment driver: single runs, brute-force sweeps, meta-GA searches and
//! reports over their outputs.
//!
//! Every command writes tab-separated records to the given writers, so the
//! binary and the tests share one code path.

mod commands;
mod report;

use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use modcma::benchmarks::BenchmarkError;
use modcma::configuration::CodecError;
use modcma::es::EsError;
use modcma::evaluation::CacheError;

pub use report::{
    activation_table, convergence_series, rank_buckets, rank_of, ActivationRow, ConvergenceRow,
    RANK_BUCKETS,
};

#[derive(Debug, Parser)]
#[command(name = "modcma", version, about = "Modular CMA-ES experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration repeatedly and print its ERT/FCE summary.
    Run(RunArgs),
    /// Evaluate every configuration of a (possibly reduced) space.
    Bruteforce(BruteforceArgs),
    /// Search the configuration space with the self-adaptive GA.
    Ga(GaArgs),
    /// Print the benchmark suite manifest.
    Manifest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reports computed from cache, trace and result files.
    #[command(subcommand)]
    Report(ReportCommand),
}

/// Flags shared by every command that executes ES runs.
#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub function: String,
    #[arg(long)]
    pub dim: usize,
    /// Runs per configuration.
    #[arg(long, default_value_t = 32)]
    pub runs: usize,
    /// Evaluations per run; defaults to 1000 * dim.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, default_value_t = modcma::es::DEFAULT_TARGET)]
    pub target: f64,
    /// Experiment seed; every random stream is derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Append-only results cache.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

/// A reduced configuration space: free 1-based gene positions over a base.
#[derive(Debug, Clone, Args)]
pub struct SpaceArgs {
    /// Comma-separated 1-based gene positions to vary (default: all).
    #[arg(long, value_delimiter = ',')]
    pub free: Vec<usize>,
    /// Values of the genes that stay fixed.
    #[arg(long, default_value = "00000000000")]
    pub base: String,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: String,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BruteforceArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Skip configurations already complete in the cache.
    #[arg(long)]
    pub resume: bool,
    /// Stop after executing this many configurations.
    #[arg(long)]
    pub max_configs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GaArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, default_value_t = 30)]
    pub ga_runs: usize,
    #[arg(long, default_value_t = modcma::ga::DEFAULT_LAMBDA)]
    pub lambda: usize,
    /// Structure evaluations per GA run.
    #[arg(long, default_value_t = modcma::ga::DEFAULT_BUDGET)]
    pub ga_budget: usize,
    /// Directory receiving trace_<i>.tsv and best.tsv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    Subgroup,
    Dimension,
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Rank GA results among all brute-force fitnesses.
    Rank {
        #[arg(long)]
        cache: PathBuf,
        /// best.tsv files written by `ga`.
        #[arg(long = "best", required = true)]
        best: Vec<PathBuf>,
        #[arg(long, default_value_t = 32)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = modcma::es::DEFAULT_TARGET)]
        target: f64,
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Module activation percentages of winning configurations.
    Activation {
        /// best.tsv files written by `ga`.
        #[arg(long = "input", required = true)]
        input: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = GroupBy::Subgroup)]
        group_by: GroupBy,
    },
    /// Mean best-so-far ERT and FCE per generation over GA traces.
    Convergence {
        #[arg(long = "trace", required = true)]
        traces: Vec<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error(transparent)]
    Es(#[from] EsError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cache is missing {missing} of {total} configurations")]
    IncompleteCache { missing: usize, total: usize },
    #[error("{file}:{line}: malformed record")]
    Malformed { file: String, line: usize },
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => commands::run(a, out),
        Command::Bruteforce(a) => commands::bruteforce(a, out, err),
        Command::Ga(a) => commands::ga(a, out, err),
        Command::Manifest { seed } => {
            let suite = modcma::benchmarks::make_suite(*seed);
            out.write_all(modcma::benchmarks::suite_manifest(&suite).as_bytes())?;
            Ok(())
        }
        Command::Report(r) => report::execute(r, out),
    }
}

/// Parses `args` (including the program name) and executes them.
pub fn run_from_args<I, T>(
    args: I,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli, out, err)
}
