//! `cira`: batch front end for corpus analysis, training, evaluation,
//! classification and the annotation service.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

mod commands;
mod error;
mod systems;

use std::path::PathBuf;
use std::process::ExitCode;

use cira_core::corpus::CorpusFormat;
use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "cira",
    version,
    about = "Causality detection in natural-language requirements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label distribution, ambiguity table and token-length coverage of a corpus.
    Analyze(AnalyzeArgs),
    /// Train one system and store the model artifact.
    Train(TrainArgs),
    /// Cross-validated comparison of several systems.
    Evaluate(EvaluateArgs),
    /// Label sentences, one per input line, as JSON lines.
    Classify(ClassifyArgs),
    /// Run the annotation and classification HTTP service.
    Serve(ServeArgs),
    /// Write a synthetic labeled corpus.
    Synth(SynthArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => CorpusFormat::Jsonl,
            FormatArg::Csv => CorpusFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Corpus file (JSONL or CSV).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Corpus format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// WordPiece vocabulary for the token-length coverage; learned from the
    /// corpus when omitted.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON grid file overriding the default hyperparameter grids.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Undersample the majority class before splitting.
    #[arg(long)]
    pub balance: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TransformerArgs {
    /// Directory with a pretrained encoder (config.json, vocab.txt,
    /// model.safetensors); a randomly initialised encoder is used otherwise.
    #[arg(long)]
    pub encoder: Option<PathBuf>,
    /// Use the small scratch encoder configuration.
    #[arg(long)]
    pub tiny: bool,
    /// Vocabulary size of a scratch encoder.
    #[arg(long, default_value_t = 8000)]
    pub vocab_size: usize,
    /// Tagger for the pos and dep variants: `rule` or `command:PROGRAM ARGS`.
    #[arg(long)]
    pub tagger: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 2e-5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.01)]
    pub weight_decay: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// System to train, e.g. `rule`, `naive_bayes`, `transformer:dep`.
    #[arg(long)]
    pub system: String,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub transformer: TransformerArgs,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Systems to compare; repeat the flag or separate with commas.
    #[arg(long, required = true)]
    pub system: Vec<String>,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    /// System the deltas are computed against; the most accurate by default.
    #[arg(long)]
    pub reference: Option<String>,
    #[command(flatten)]
    pub transformer: TransformerArgs,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Model artifact written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Input file with one sentence per line; standard input when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured port.
    #[arg(long)]
    pub port: Option<u16>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub sentences: usize,
    /// Number of causal sentences; 28 % of the corpus when omitted.
    #[arg(long)]
    pub causal: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: FormatArg,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write the outputs somewhere else than the recorded directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let args: Vec<String> = std::env::args().collect();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(args: &[String]) -> Result<(), CliError> {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let text = e.render().to_string();
            let text = text
                .trim_end()
                .strip_prefix("error: ")
                .unwrap_or(text.trim_end());
            return Err(CliError::Usage(text.to_string()));
        }
    };
    let recorded: Vec<String> = args.iter().skip(1).cloned().collect();
    commands::dispatch(cli.command, recorded)
}
