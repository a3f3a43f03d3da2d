//! `tcn-soc`: simulate drive cycles, train and evaluate TCN state-of-charge
//! estimators, sweep architectures and benchmark saved models.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tcn_soc::data::ProfileKind;
use tcn_soc::train::{EvalMode, Protocol};

#[derive(Debug, Parser)]
#[command(name = "tcn-soc", version, about = "TCN state-of-charge estimation toolkit")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Sweep cells trained in parallel.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic drive cycle with the equivalent-circuit simulator.
    Simulate(SimulateArgs),
    /// Train a model on one or more drive-cycle CSVs.
    Train(TrainArgs),
    /// Score a saved model on a drive cycle.
    Eval(EvalArgs),
    /// Train and benchmark a stacks x window grid.
    Sweep(SweepArgs),
    /// Time single-window predictions of a saved model.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// One of highway, aggressive, urban, mixed.
    #[arg(long)]
    pub kind: ProfileKind,
    /// Seconds of drive time.
    #[arg(long)]
    pub duration: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Sample period in seconds.
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub initial_soc: f64,
    /// Stop once SOC falls below this.
    #[arg(long, default_value_t = 0.0)]
    pub soc_floor: f64,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 8)]
    pub kernel: usize,
    #[arg(long, default_value_t = 4)]
    pub filters: usize,
    /// Dropout keep probability.
    #[arg(long, default_value_t = 0.9)]
    pub keep_prob: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.1)]
    pub val_frac: f64,
    /// Epochs without validation improvement before stopping; 0 disables.
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    /// Spacing between training windows.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// SOC at the first sample of unlabeled CSVs, which are then labeled by
    /// coulomb counting.
    #[arg(long, default_value_t = 1.0)]
    pub initial_soc: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long = "data", required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub model_out: PathBuf,
    #[arg(long)]
    pub history_out: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub window: usize,
    #[arg(long, default_value_t = 20)]
    pub stacks: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub label: LabelArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// teacher or closed-loop.
    #[arg(long, default_value_t = EvalMode::TeacherForced)]
    pub mode: EvalMode,
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    #[command(flatten)]
    pub label: LabelArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub stacks: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub windows: Vec<usize>,
    #[arg(long = "data", required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// leave-one-cycle-out or hybrid.
    #[arg(long, default_value_t = Protocol::LeaveOneCycleOut)]
    pub protocol: Protocol,
    #[arg(long, default_value_t = EvalMode::TeacherForced)]
    pub eval_mode: EvalMode,
    /// Spacing between scored windows (teacher-forced only).
    #[arg(long, default_value_t = 1)]
    pub eval_stride: usize,
    #[arg(long, default_value_t = 100)]
    pub warmup: usize,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub label: LabelArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 100)]
    pub warmup: usize,
    /// Time the first window of this cycle instead of a synthetic one.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub label: LabelArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
