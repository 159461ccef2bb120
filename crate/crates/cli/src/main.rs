//! `niqqud`: build lexicons, generate and render candidates, train the
//! reference ranker, and evaluate systems and baselines.
//!
//! Exit status: 0 on success, 1 on a usage error, 2 on a data error, 3 on
//! an internal failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::FileConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "niqqud", version, about = "Hebrew diacritics restoration by candidate ranking")]
struct Cli {
    /// Seed for every random draw of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML file of defaults; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fold a diacritized corpus into a lexicon file.
    BuildLexicon(BuildLexiconArgs),
    /// List candidate diacritizations of undiacritized words.
    Candidates(CandidatesArgs),
    /// Gold coverage of generated candidate sets over a grid of k and c.
    Coverage(CoverageArgs),
    /// Rasterize text to a PNG or PGM image.
    Render(RenderArgs),
    /// Train the reference ranker.
    Train(TrainArgs),
    /// Evaluate a checkpoint, or a predicted text against a gold text.
    Evaluate(EvaluateArgs),
    /// Evaluate the majority or nearest-neighbour baseline.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
struct BuildLexiconArgs {
    /// Diacritized corpus files.
    #[arg(long, required = true, num_args = 1..)]
    corpus: Vec<PathBuf>,
    #[arg(long, short)]
    output: PathBuf,
    /// Reject malformed tokens instead of skipping them.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    strict: Option<bool>,
}

#[derive(Debug, Args)]
struct CandidatesArgs {
    #[arg(long)]
    lexicon: PathBuf,
    /// Words to diacritize; marks, if any, are stripped first.
    #[arg(required_unless_present = "input")]
    words: Vec<String>,
    /// File of words, whitespace separated.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CoverageArgs {
    #[arg(long)]
    lexicon: PathBuf,
    /// Diacritized test corpus files.
    #[arg(long, required = true, num_args = 1..)]
    test: Vec<PathBuf>,
    /// Neighbour counts: N, N,M,... or A..B.
    #[arg(long = "k", value_name = "RANGE")]
    k_range: Option<String>,
    /// Candidate counts: N, N,M,... or A..B.
    #[arg(long = "c", value_name = "RANGE")]
    c_range: Option<String>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    text: Option<String>,
    /// Text file; line breaks become spaces.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output image; `.pgm` writes binary PGM, anything else PNG.
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long)]
    cell_height: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    mirror: Option<bool>,
    /// Drop cells beyond the patch limit instead of failing.
    #[arg(long)]
    truncate: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Diacritized training corpus files.
    #[arg(long, required = true, num_args = 1..)]
    corpus: Vec<PathBuf>,
    /// Lexicon for candidate generation (default: built from the corpus).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Checkpoint to write.
    #[arg(long, short)]
    output: PathBuf,
    /// Loss and accuracy trace (default: `<output>.trace.csv`).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    /// Auxiliary loss: none, bag or positional.
    #[arg(long)]
    aux: Option<String>,
    /// Mirror candidate images.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    mirror: Option<bool>,
    /// Cap dominant patterns at the count of their alternatives.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    balanced: Option<bool>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    embed: Option<usize>,
    #[arg(long)]
    buckets: Option<usize>,
    #[arg(long)]
    window_radius: Option<usize>,
    #[arg(long)]
    cell_height: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long, required_unless_present = "predicted")]
    checkpoint: Option<PathBuf>,
    #[arg(long, required_unless_present = "predicted")]
    lexicon: Option<PathBuf>,
    /// Diacritized test corpus files.
    #[arg(long, num_args = 1.., required_unless_present = "predicted")]
    test: Vec<PathBuf>,
    /// oracle or knn.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    /// Gold text for external evaluation.
    #[arg(long, requires = "predicted", conflicts_with_all = ["checkpoint", "lexicon", "test"])]
    gold: Option<PathBuf>,
    /// Predicted text aligned with `--gold`.
    #[arg(long, requires = "gold")]
    predicted: Option<PathBuf>,
    /// Vowel class table for VOC.
    #[arg(long)]
    voc_table: Option<PathBuf>,
    /// JSON report; the text table goes next to it as `<output>.txt`.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    /// majority or knn1.
    kind: String,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    test: Vec<PathBuf>,
    #[arg(long)]
    voc_table: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let globals = FileConfig {
        seed: cli.seed,
        threads: cli.threads,
        ..FileConfig::default()
    };
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match cli.command {
        Command::BuildLexicon(a) => commands::build_lexicon(a, globals, file),
        Command::Candidates(a) => commands::candidates(a, globals, file),
        Command::Coverage(a) => commands::coverage(a, globals, file),
        Command::Render(a) => commands::render(a, globals, file),
        Command::Train(a) => commands::train(a, globals, file),
        Command::Evaluate(a) => commands::evaluate(a, globals, file),
        Command::Baseline(a) => commands::baseline(a, globals, file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("niqqud: {e}");
            e.exit_code()
        }
    }
}
