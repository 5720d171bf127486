//! The `fefm` command line.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 data error
//! (including an undefined AUC), 3 numeric failure.

mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{load_data, DataPaths, LoadedData, RunConfig};
pub use manifest::{sha256_hex, FileRecord, Manifest, MANIFEST_FILE};

use crate::data::SplitRule;
use crate::model::Architecture;

#[derive(Debug, Parser)]
#[command(
    name = "fefm",
    version,
    about = "Train, evaluate and inspect click models with field-pair matrix interactions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a vocabulary on the training split and write encoded splits.
    Preprocess(PreprocessArgs),
    /// Train a model from a run config.
    Train(TrainArgs),
    /// Print AUC and log loss of a model on encoded data.
    Evaluate(EvaluateArgs),
    /// Write click probabilities for encoded data.
    Predict(PredictArgs),
    /// Rank field pairs of an FEFM model by interaction strength.
    Analyze(AnalyzeArgs),
    /// Train one model per embedding dimension and tabulate the metrics.
    Sweep(SweepArgs),
    /// Generate a synthetic dataset with planted field-pair interactions.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitRuleArg {
    Floor,
    TwoStageCeil,
}

impl From<SplitRuleArg> for SplitRule {
    fn from(r: SplitRuleArg) -> Self {
        match r {
            SplitRuleArg::Floor => SplitRule::Floor,
            SplitRuleArg::TwoStageCeil => SplitRule::TwoStageCeil,
        }
    }
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Delimited raw data; header-less files need `columns` in the schema.
    #[arg(long)]
    pub input: PathBuf,
    /// TOML table schema.
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = crate::data::DEFAULT_MIN_FREQUENCY)]
    pub min_frequency: u64,
    /// Train, validation and test shares.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.64, 0.16, 0.20])]
    pub ratios: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SplitRuleArg::Floor)]
    pub split_rule: SplitRuleArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Settings that override the run config.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_architecture)]
    pub model: Option<Architecture>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// DeepFEFM ablation 1 to 4 (0 restores the full model).
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=4))]
    pub ablation: Option<u8>,
    /// Use the pair matrix `U` as is instead of `U + Uᵀ`.
    #[arg(long)]
    pub asymmetric: bool,
}

fn parse_architecture(s: &str) -> Result<Architecture, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Encoded data in the `label field:feature:1` format.
    #[arg(long)]
    pub data: PathBuf,
    /// Also write `probability,label` rows here.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Vocabulary for field names; fields are numbered without it.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    pub top: usize,
    /// Directory for `pair_strengths.csv` and `pair_strengths.txt`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Embedding dimensions to train, e.g. `2,4,8`.
    #[arg(long = "k", value_delimiter = ',', required = true)]
    pub ks: Vec<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record a failed dimension in the table and carry on.
    #[arg(long)]
    pub continue_on_failure: bool,
    /// Train the dimensions concurrently.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30_000)]
    pub rows: usize,
    #[arg(long, default_value_t = 8)]
    pub fields: usize,
    #[arg(long, default_value_t = 20)]
    pub values: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
