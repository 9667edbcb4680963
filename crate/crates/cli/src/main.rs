//! `mfgsense` command-line front end.
//!
//! Exit codes: 0 on success, 1 on user error (bad flags, files or
//! configuration), 2 when an internal invariant fails.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] mfgsense::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(mfgsense::Error::Invariant(_)) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mfgsense", version, about = "Sensor anomaly detection and defect classification")]
pub struct Cli {
    /// TOML run configuration; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a process, tri-axial or pharma file and summarize it.
    Ingest(IngestArgs),
    /// Write synthetic vibration, process or spike data as CSV.
    Synth(SynthArgs),
    /// Forecasting benchmark with λ-rule anomaly detection.
    Bench(BenchArgs),
    /// Train a defect classifier on synthetic vibration samples.
    Train(TrainArgs),
    /// Source-to-target sensor transfer experiment (DNN-R vs DNN-TL).
    Transfer(TransferArgs),
    /// Train on each speed, test on every speed, plus the augmented model.
    CrossRpm(CrossRpmArgs),
    /// Cumulative or independent tuning sweep.
    Tune(TuneArgs),
    /// Autoencoder classifier for machine operating states.
    Autoenc(AutoencArgs),
    /// Print the metrics of a report, or their deltas between two reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// process, triaxial or pharma.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub input: PathBuf,
    /// IANA time zone of the timestamps.
    #[arg(long)]
    pub tz: Option<String>,
    /// Tri-axial sample rate in Hz.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub rpm: Option<u32>,
    /// Abnormal dates (YYYY-MM-DD) for process labeling.
    #[arg(long, value_delimiter = ',')]
    pub abnormal_dates: Option<Vec<String>>,
    /// Summary JSON path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// vibration, process or spikes.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rpm: Option<u32>,
    /// normal, near-failure or failure.
    #[arg(long)]
    pub level: Option<String>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub days: Option<u32>,
    /// Failure days as offsets from the first day.
    #[arg(long, value_delimiter = ',')]
    pub failure_days: Option<Vec<u32>>,
    #[arg(long)]
    pub spikes: Option<usize>,
    #[arg(long)]
    pub magnitude: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Built-in names (synth, synth-vibration, synth-chiller, synth-spikes) or process:PATH.
    #[arg(long, value_delimiter = ',')]
    pub datasets: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Hyperparameter override `kind.key=value`; replaces that kind's default grid.
    #[arg(long = "param")]
    pub params: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub one_sided: bool,
    #[arg(long)]
    pub epsilon_scale: Option<f64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Record per-cell wall-clock time (makes reruns differ).
    #[arg(long)]
    pub timings: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Synthetic per-sample vibration data.
#[derive(Debug, Args, Clone)]
pub struct SampleArgs {
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// all or xz.
    #[arg(long)]
    pub axes: Option<String>,
    /// Amplitude ∝ (rpm / 450)^exponent; constant when absent.
    #[arg(long)]
    pub amplitude_exponent: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct TrainingArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// none, zscore or minmax.
    #[arg(long)]
    pub normalization: Option<String>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub rpm: Option<u32>,
    /// Speeds to pool (with --augment).
    #[arg(long, value_delimiter = ',')]
    pub rpms: Option<Vec<u32>>,
    /// Interpolants per speed; pools the speeds in --rpms.
    #[arg(long)]
    pub augment: Option<usize>,
    /// Normal vs not-normal instead of three defect levels.
    #[arg(long)]
    pub binary: bool,
    #[command(flatten)]
    pub samples: SampleArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Output directory for model.json and report.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[arg(long)]
    pub rpm: Option<u32>,
    #[arg(long)]
    pub target_per_class: Option<usize>,
    #[arg(long)]
    pub lr_scale: Option<f64>,
    #[arg(long)]
    pub freeze_hidden: bool,
    #[command(flatten)]
    pub samples: SampleArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrossRpmArgs {
    #[arg(long, value_delimiter = ',')]
    pub rpms: Option<Vec<u32>>,
    /// Interpolants per speed for the augmented row; 0 drops the row.
    #[arg(long)]
    pub augment: Option<usize>,
    #[command(flatten)]
    pub samples: SampleArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub rpm: Option<u32>,
    /// Tuning step `key=value` (features, normalization, neurons, layers, epochs, batch); repeatable.
    #[arg(long = "step")]
    pub steps: Vec<String>,
    /// cumulative or independent.
    #[arg(long)]
    pub mode: Option<String>,
    #[command(flatten)]
    pub samples: SampleArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AutoencArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// latent or hidden.
    #[arg(long)]
    pub head_on: Option<String>,
    #[arg(long)]
    pub days: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub failure_days: Option<Vec<u32>>,
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Output directory for model.json and report.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report to summarize.
    pub report: Option<PathBuf>,
    /// Two reports to diff.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub compare: Option<Vec<PathBuf>>,
}

fn run(cli: Cli) -> CliResult<()> {
    let file = config::load_config(cli.config.as_deref())?;
    let jobs = cli.jobs.or(file.jobs);
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(format!("worker pool: {e}")))?;
    }
    match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Synth(a) => commands::synth(a),
        Command::Bench(a) => commands::bench(a, &file),
        Command::Train(a) => commands::train(a, &file),
        Command::Transfer(a) => commands::transfer(a, &file),
        Command::CrossRpm(a) => commands::cross_rpm(a, &file),
        Command::Tune(a) => commands::tune(a, &file),
        Command::Autoenc(a) => commands::autoenc(a, &file),
        Command::Report(a) => report::report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
