//! `sentimix`: preprocessing, training, prediction, ensembling and scoring
//! of code-mixed tweet sentiment from the command line.
//!
//! Exit codes: 0 success, 1 data or validation failure, 2 usage error
//! (bad flags, missing input files).

mod artifacts;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sentimix_core::corpus::Format;
use sentimix_core::{ArchId, ModelConfig, TrainHyper};

/// Errors caused by how the program was invoked rather than by the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "sentimix", version, about = "Sentiment classification for code-mixed Hinglish tweets")]
struct Cli {
    /// Only log errors. Verbosity is otherwise read from SENTIMIX_LOG.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print sentence count, average length and vocabulary size of a corpus.
    Stats(StatsArgs),
    /// Clean, stem and filter a corpus; write one tokenized tweet per line.
    Preprocess(PreprocessArgs),
    /// Train one model and write it with its vocabulary and stop lists.
    Train(TrainArgs),
    /// Write class probabilities for a corpus using a trained model directory.
    Predict(PredictArgs),
    /// Combine probability files with the per-class maximum rule.
    Ensemble(EnsembleArgs),
    /// Score predicted labels against gold labels.
    Evaluate(EvaluateArgs),
    /// Train all four models, ensemble them on the test set and score the result.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Tsv,
    Conll,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Tsv => Format::Tsv,
            FormatArg::Conll => Format::Conll,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ArchArg {
    Lstm,
    LstmConv,
    #[value(name = "bilstm")]
    BiLstm,
    Cnn,
}

impl From<ArchArg> for ArchId {
    fn from(a: ArchArg) -> ArchId {
        match a {
            ArchArg::Lstm => ArchId::Lstm,
            ArchArg::LstmConv => ArchId::LstmConv,
            ArchArg::BiLstm => ArchId::BiLstm,
            ArchArg::Cnn => ArchId::Cnn,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum GoldFormat {
    /// `id <TAB> label` lines, as written by `ensemble`.
    Labels,
    Tsv,
    Conll,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: FormatArg,
}

#[derive(Args, Clone)]
pub struct StopListArgs {
    /// English stop words, one per line [default: bundled list]
    #[arg(long)]
    pub english_stoplist: Option<PathBuf>,
    /// High-frequency token list, one per line [default: top 1000 by term frequency]
    #[arg(long)]
    pub hindi_stoplist: Option<PathBuf>,
}

#[derive(Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: FormatArg,
    /// Output file: `id <TAB> space-separated tokens [<TAB> label]`
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the high-frequency list that was applied.
    #[arg(long)]
    pub stoplist_out: Option<PathBuf>,
    #[command(flatten)]
    pub stoplists: StopListArgs,
}

#[derive(Args, Clone)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep the training order fixed instead of reshuffling every epoch.
    #[arg(long)]
    pub no_shuffle: bool,
    #[arg(long, default_value_t = 20_000)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 50)]
    pub seq_len: usize,
    #[arg(long, default_value_t = 128)]
    pub embedding_dim: usize,
    #[arg(long, default_value_t = 64)]
    pub lstm_units: usize,
    #[arg(long, default_value_t = 64)]
    pub conv_filters: usize,
    #[arg(long, default_value_t = 32)]
    pub dense_hidden: usize,
}

impl HyperArgs {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            vocab_size: self.vocab_size,
            seq_len: self.seq_len,
            embedding_dim: self.embedding_dim,
            lstm_units: self.lstm_units,
            conv_filters: self.conv_filters,
            dense_hidden: self.dense_hidden,
        }
    }

    pub fn train_hyper(&self, epochs: usize, seed: u64) -> TrainHyper {
        TrainHyper { epochs, batch_size: self.batch_size, learning_rate: self.lr, seed, shuffle: !self.no_shuffle }
    }
}

#[derive(Args)]
pub struct TrainArgs {
    /// Labeled training corpus.
    #[arg(long)]
    pub input: PathBuf,
    /// Labeled validation corpus, scored after every epoch.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    /// Test corpus; only its text contributes to the term-frequency stop list.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: FormatArg,
    #[arg(long, value_enum)]
    pub arch: ArchArg,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub stoplists: StopListArgs,
    /// Output directory for the model and its artifacts.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Model directory written by `train` (or the model file inside it).
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: FormatArg,
    /// Output file: `id <TAB> p0 <TAB> p1 <TAB> p2`
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EnsembleArgs {
    /// Probability file written by `predict`; repeat for every model.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Output file: `id <TAB> label`
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Gold labels.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, default_value = "labels")]
    pub gold_format: GoldFormat,
    /// Predicted labels, `id <TAB> label`.
    #[arg(long)]
    pub input: PathBuf,
    /// Also write the metrics as `metric <TAB> class <TAB> value` lines.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReproduceArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: FormatArg,
    /// Epochs for each of the four models.
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub stoplists: StopListArgs,
    #[arg(long)]
    pub out: PathBuf,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if cli.quiet { "error" } else { "info" };
    let mut logger = env_logger::Builder::from_env(env_logger::Env::new().filter_or("SENTIMIX_LOG", default_level));
    if cli.quiet {
        logger.filter_level(log::LevelFilter::Error);
    }
    logger.format_timestamp(None).init();

    let result = match cli.command {
        Command::Stats(a) => commands::stats(&a),
        Command::Preprocess(a) => commands::preprocess(&a),
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Ensemble(a) => commands::ensemble(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Reproduce(a) => commands::reproduce(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("sentimix: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
