//! `wis` — token-level text watermarking from the command line.
//!
//! Exit codes: 0 success; 2 configuration or input-validation error
//! (including usage errors, which clap also reports as 2); 1 runtime error
//! (failed writes and other I/O on files that exist).

mod commands;
mod config;

use clap::{Parser, Subcommand};
use wis_core::WisError;

#[derive(Parser)]
#[command(
    name = "wis",
    version,
    about = "Token-level text watermarking: train, generate, detect, benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an n-gram language model from a JSONL corpus
    TrainLm(commands::TrainLmArgs),
    /// Generate completions with the greenlist watermark (or none)
    Generate(commands::GenerateArgs),
    /// Score text for the watermark and emit a verdict as JSON
    Detect(commands::DetectArgs),
    /// Build paraphrase-count token labels for scorer training
    BuildLabels(commands::BuildLabelsArgs),
    /// Train an importance scorer on labeled data
    TrainScorer(commands::TrainScorerArgs),
    /// Sweep (gamma, delta, method) and report the trade-off as CSV
    Bench(commands::BenchArgs),
}

/// Validation problems exit 2; runtime failures (I/O other than a missing
/// file) exit 1.
fn exit_code(err: &WisError) -> i32 {
    match err {
        WisError::Io { source, .. } if source.kind() != std::io::ErrorKind::NotFound => 1,
        _ => 2,
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::TrainLm(args) => commands::train_lm(args),
        Command::Generate(args) => commands::generate(args),
        Command::Detect(args) => commands::detect_cmd(args),
        Command::BuildLabels(args) => commands::build_labels_cmd(args),
        Command::TrainScorer(args) => commands::train_scorer_cmd(args),
        Command::Bench(args) => commands::bench(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
