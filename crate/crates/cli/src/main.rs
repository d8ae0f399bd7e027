//! `tmethod` command-line front end.

mod commands;
mod data;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tmethod::experiments::{ClassicalModel, DEFAULT_LEVELS, DEFAULT_SEED};
use tmethod::{DistributionSpec, FamilyKind};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "tmethod",
    version,
    about = "Extreme value fits of block maxima with and without a monotone transformation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit block maxima read from a file or simulated from a named law.
    Fit(FitArgs),
    /// Norming constants, rate W(n) and uniform error d_n over a grid of n.
    Convergence(ConvergenceArgs),
    /// Run the disk example or a Monte Carlo comparison.
    Experiment(ExperimentArgs),
    /// Suggest a transformation family from the curvature of the tail.
    Suggest(SuggestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitFamily {
    /// Classical GEV with free shape.
    Gev,
    /// Classical GEV with the shape fixed at zero.
    Gumbel,
    Identity,
    Power,
    LogPower,
    /// Family from `suggest`; with two candidates the higher likelihood wins.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformArg {
    Identity,
    Power,
    LogPower,
}

impl From<TransformArg> for FamilyKind {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::Identity => FamilyKind::Identity,
            TransformArg::Power => FamilyKind::Power,
            TransformArg::LogPower => FamilyKind::LogPower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassicalArg {
    Gev,
    Gumbel,
}

impl From<ClassicalArg> for ClassicalModel {
    fn from(c: ClassicalArg) -> Self {
        match c {
            ClassicalArg::Gev => ClassicalModel::Gev,
            ClassicalArg::Gumbel => ClassicalModel::Gumbel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// 100 boxes of 10 disks; radius GEV against area Gumbel.
    Fig1Disks,
    /// Normal maxima, n = 100, m = 1000, power family.
    Fig2Normal,
    /// Lognormal maxima, n = 100, m = 1000, log-power family.
    Fig2Lognormal,
    /// Exponential maxima, n = 100, m = 1000, power family.
    SuppExponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct FitOptions {
    /// JSON file with any of restarts, tolerance, max_iterations, jitter, seed.
    #[arg(long, value_name = "PATH")]
    fit_config: Option<PathBuf>,
    /// Optimizer starts per fit.
    #[arg(long)]
    restarts: Option<usize>,
    /// Simplex diameter at which the optimizer stops.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Relative jitter of the extra starts.
    #[arg(long)]
    jitter: Option<f64>,
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Master seed [default: 2024].
    #[arg(long, env = "TMETHOD_SEED")]
    seed: Option<u64>,
}

impl SeedArg {
    fn value(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

#[derive(Debug, Args)]
struct SampleSource {
    /// One-column file of observations; a header row is optional.
    #[arg(long, value_name = "PATH", conflicts_with = "dist")]
    input: Option<PathBuf>,
    /// Simulate block maxima from this law instead, e.g. `normal`, `gamma:2`.
    #[arg(long)]
    dist: Option<DistributionSpec>,
    /// Block size of simulated maxima.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Number of simulated maxima.
    #[arg(long, default_value_t = 1000)]
    m: usize,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    source: SampleSource,
    #[arg(long, value_enum, default_value_t = FitFamily::Power)]
    family: FitFamily,
    /// Exceedance probabilities at which to extrapolate.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LEVELS)]
    levels: Vec<f64>,
    /// Fit JSON destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// QQ table destination.
    #[arg(long, value_name = "PATH")]
    qq: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    options: FitOptions,
}

#[derive(Debug, Args)]
struct ConvergenceArgs {
    #[arg(long)]
    dist: DistributionSpec,
    /// Block sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [10u64, 100, 1000, 10_000])]
    n: Vec<u64>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Source law; overrides the preset's.
    #[arg(long)]
    dist: Option<DistributionSpec>,
    #[arg(long, value_enum)]
    family: Option<TransformArg>,
    /// Classical model compared against the transformed fit.
    #[arg(long, value_enum, default_value_t = ClassicalArg::Gev)]
    classical: ClassicalArg,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Monte Carlo runs; 1000 for the full-size study.
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    /// Worker threads; all cores when absent. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Summary JSON destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Per-run quantiles as CSV.
    #[arg(long, value_name = "PATH")]
    runs_csv: Option<PathBuf>,
    /// QQ table of the typical run, or the probability grid of the disk example.
    #[arg(long, value_name = "PATH")]
    table_csv: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    options: FitOptions,
}

#[derive(Debug, Args)]
struct SuggestArgs {
    #[command(flatten)]
    source: SampleSource,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim_end().to_string());
            return fail(&err);
        }
    };
    let outcome = match cli.command {
        Command::Fit(args) => commands::fit(args),
        Command::Convergence(args) => commands::convergence(args),
        Command::Experiment(args) => commands::experiment(args),
        Command::Suggest(args) => commands::suggest(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}
