//! Command-line front end: dataset generation, training, evaluation and the
//! grid and preprocessing experiments.

mod commands;
mod experiment;
mod util;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sstgcn_core::roadgraph::FilterKind;

pub use experiment::{ExperimentSpec, GridCellResult, RunConfig, GRID_LABEL_COLUMN};
pub use util::CliError;

#[derive(Debug, Parser)]
#[command(name = "sstgcn", version, about = "Road-level accident risk prediction experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic world and a balanced dataset.
    Gen(GenArgs),
    /// Split a dataset, train a model and report test metrics.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Train every (K, n, k) cell of a parameter grid.
    Grid(GridArgs),
    /// Compare the four graph preprocessing variants.
    Filters(FiltersArgs),
}

/// Window overrides shared by dataset-building commands.
#[derive(Debug, Args, Default)]
pub struct WindowArgs {
    /// Hop radius of the subgraph around each road.
    #[arg(long)]
    pub khop: Option<usize>,
    /// Number of time slices per sample.
    #[arg(long)]
    pub seq_num: Option<usize>,
    /// Minutes between slices and label look-ahead.
    #[arg(long)]
    pub interval: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator config (JSON). Defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset output path (.jsonl); network and streams are written beside it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub filter: Option<FilterKind>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset produced by `gen`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Model and training config (JSON). Defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Optional model config the checkpoint must match.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for the report and ROC points.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Generator config (JSON) for the shared synthetic world.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Experiment spec (JSON). Defaults to the full 4 x 3 x 3 grid.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Restrict the grid to one value per axis.
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub filter: Option<FilterKind>,
}

#[derive(Debug, Args)]
pub struct FiltersArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[command(flatten)]
    pub window: WindowArgs,
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Grid(a) => experiment::grid(a),
        Command::Filters(a) => experiment::filters(a),
    }
}

/// Sizes the global thread pool from `SSTGCN_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SSTGCN_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("SSTGCN_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::runtime(format!("thread pool: {e}")))
}
