//! The `prepsense` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal error.

mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{ExperimentConfig, SEED_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "prepsense",
    version,
    about = "Preposition sense disambiguation with multilingual context pretraining"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine (English preposition, foreign preposition) examples from an aligned bitext.
    Extract(ExtractArgs),
    /// Pretrain the context encoder on mined examples.
    Pretrain(PretrainArgs),
    /// Train a sense classifier.
    Train(TrainArgs),
    /// Evaluate one model, or the majority vote of several.
    Eval(EvalArgs),
    /// Predict senses for preposition spans.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Tokenized English side, one sentence per line.
    #[arg(long)]
    pub en: PathBuf,
    /// Tokenized foreign side, line-aligned with --en.
    #[arg(long)]
    pub foreign: PathBuf,
    /// Pharaoh alignments (`i-j`, 0-based English-foreign).
    #[arg(long)]
    pub align: PathBuf,
    /// Language id of the foreign side.
    #[arg(long)]
    pub lang: String,
    /// English preposition list, one per line.
    #[arg(long)]
    pub preps: PathBuf,
    /// Foreign preposition list as LANG=PATH; repeatable.
    #[arg(long = "inventory", value_name = "LANG=PATH", required = true)]
    pub inventories: Vec<String>,
    /// Output example TSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Output statistics CSV (default: <out>.stats.csv).
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    /// Example TSV files from `extract`; repeatable.
    #[arg(long = "examples", required = true)]
    pub examples: Vec<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_model: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Sense annotations for training.
    #[arg(long)]
    pub train: PathBuf,
    /// Sense annotations for early stopping (default: every fourth training instance of each sense).
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// CoNLL-U file holding the annotated sentences (overrides `data.sentences`).
    #[arg(long)]
    pub sentences: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model file written by `pretrain`.
    #[arg(long)]
    pub pretrained_encoder: Option<PathBuf>,
    #[arg(long)]
    pub out_model: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Sense model; several trigger majority voting.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    /// Sense annotations to evaluate on.
    #[arg(long)]
    pub test: PathBuf,
    /// CoNLL-U file holding the test sentences.
    #[arg(long)]
    pub sentences: PathBuf,
    /// Directory for summary.txt and the CSV breakdowns.
    #[arg(long)]
    pub report_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input_conllu: PathBuf,
    /// Rows of `sentence_id<TAB>start<TAB>end`.
    #[arg(long)]
    pub spans: PathBuf,
    /// Output TSV (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Extract(a) => commands::extract(&a),
        Command::Pretrain(a) => commands::pretrain(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Predict(a) => commands::predict(&a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match std::panic::catch_unwind(|| execute(cli)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => 3,
    }
}
