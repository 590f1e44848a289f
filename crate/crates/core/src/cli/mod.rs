//! The `cage` command-line tool.

mod ablate;
mod commands;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::training::config::{BatchSize, InitScheme, OptimizerKind};
use crate::training::engine::GuideMode;
use crate::variants::VariantId;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cage",
    version,
    about = "Quality-guided label aggregation for labeling functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a label model and write params.json, report.json, manifest.json.
    Train(TrainArgs),
    /// Write a predictions CSV with full posteriors.
    Predict(PredictArgs),
    /// Score a predictions CSV against a dataset's gold labels.
    Eval(EvalArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Train several configurations with a shared seed and compare them.
    Ablate(AblateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TrainingFlags {
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Positive integer or "full".
    #[arg(long, default_value = "full")]
    pub batch_size: BatchSize,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
    /// Weight on the guide regularizer.
    #[arg(long, default_value_t = 1.0)]
    pub reg_weight: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Evaluate on a single thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

impl From<OptimizerArg> for OptimizerKind {
    fn from(o: OptimizerArg) -> Self {
        match o {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Adam => OptimizerKind::Adam,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Label model variant.
    #[arg(long = "model", default_value = "cage")]
    pub variant: VariantId,
    #[arg(long, default_value = "kl_guide")]
    pub guide_mode: GuideMode,
    /// Defaults to all_ones with kl_guide and agreeing otherwise.
    #[arg(long)]
    pub init: Option<InitScheme>,
    #[command(flatten)]
    pub training: TrainingFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// params.json written by `cage train`.
    #[arg(long, required_unless_present = "majority")]
    pub params: Option<PathBuf>,
    /// Use majority vote instead of a trained model.
    #[arg(long, conflicts_with = "params")]
    pub majority: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Oracle,
    Twoset,
    NearRandom,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// Number of instances.
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    /// Number of LFs (voters for near-random).
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// Classes (oracle).
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Comma-separated class weights (oracle); uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    pub balance: Option<Vec<f64>>,
    /// Size of the class-1 LF set (twoset).
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    /// Fraction of class-1 instances (twoset).
    #[arg(long, default_value_t = 0.9)]
    pub skew: f64,
    /// Voter advantage over chance (near-random).
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// CAGE under every guide mode.
    Guides,
    /// CAGE and the alternative continuous potentials.
    Potentials,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, required_unless_present = "configs")]
    pub suite: Option<Suite>,
    /// `variant:guide_mode[:init]`, repeatable.
    #[arg(long = "config", conflicts_with = "suite")]
    pub configs: Vec<String>,
    #[command(flatten)]
    pub training: TrainingFlags,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_INVALID;
    }
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Eval(a) => commands::eval(a),
        Command::Synth(a) => commands::synth(a),
        Command::Ablate(a) => ablate::ablate(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run_with(std::env::args_os())
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("CAGE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("CAGE_THREADS must be a positive integer, got {value:?}"))?;
    #[cfg(feature = "parallel")]
    {
        // a second call in the same process keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<crate::data::dataset::DataError> for Failure {
    fn from(e: crate::data::dataset::DataError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<crate::error::InputError> for Failure {
    fn from(e: crate::error::InputError) -> Self {
        Failure::invalid(e.to_string())
    }
}

fn io_failure(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::invalid(format!("{}: {e}", path.display()))
}
