//! `persona-graph`: reproducible pipelines for multi-label persona
//! statement classification over a weighted semantic k-NN graph.
//!
//! Subcommands mirror the pipeline stages so every intermediate artifact
//! is inspectable: `stats`, `build-graph`, `train`, `experiment`, `synth`.
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
//! failure.

mod commands;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "persona-graph",
    version,
    about = "Classify persona statements over a weighted semantic k-NN graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print per-label and overall record counts for a corpus
    Stats(commands::stats::StatsArgs),
    /// Build the weighted k-NN persona graph from features
    BuildGraph(commands::build_graph::BuildGraphArgs),
    /// Train one model and write a checkpoint
    Train(commands::train::TrainArgs),
    /// Run the fraction-sweep experiment grid
    Experiment(commands::experiment::ExperimentArgs),
    /// Generate a synthetic cluster corpus with embeddings
    Synth(commands::synth::SynthArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Stats(args) => commands::stats::run(args),
        Command::BuildGraph(args) => commands::build_graph::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Experiment(args) => commands::experiment::run(args),
        Command::Synth(args) => commands::synth::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
