//! `hdstream`: synthetic data, stream learning, evaluation and merge timing.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

pub const THREADS_ENV: &str = "IMAGEHD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hdstream", version, about = "Hyperdimensional continual clustering of feature streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a labeled Gaussian-mixture feature file.
    Gen(GenArgs),
    /// Stream a feature file through the learner.
    Run(RunArgs),
    /// Time cluster consolidation over growing cluster counts.
    MergeBench(MergeBenchArgs),
    /// Score an event log against labels.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub classes: usize,
    #[arg(long)]
    pub per_class: usize,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.05)]
    pub spread: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u32,
    /// interleaved or sequential
    #[arg(long, default_value = "interleaved")]
    pub order: String,
    /// Output path; `.csv` selects the text format, anything else IHDF.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// key=value file; omitted keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Learner state after the run, for exact resumption.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Calibrated item memory after the run.
    #[arg(long)]
    pub item_memory: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MergeBenchArgs {
    /// Ascending comma-separated cluster counts.
    #[arg(long, value_delimiter = ',', default_value = "128,256,512")]
    pub k_list: Vec<usize>,
    #[arg(long, default_value_t = 4096)]
    pub dim: usize,
    #[arg(long, default_value_t = 16)]
    pub k_prime: usize,
    #[arg(long, default_value_t = 4)]
    pub top_m: usize,
    #[arg(long, default_value_t = 2)]
    pub iters: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u32,
    #[arg(long, default_value_t = 7)]
    pub reps: usize,
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// Labeled feature file matching the event log sample for sample.
    #[arg(long)]
    pub labels_from: PathBuf,
    /// Metrics JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(Failure::usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::runtime(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Run(a) => commands::run(&a),
        Command::MergeBench(a) => commands::merge_bench(&a),
        Command::Eval(a) => commands::eval(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hdstream: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
