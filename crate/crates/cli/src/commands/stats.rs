use std::path::PathBuf;

use clap::Args;
use persona_graph::corpus::Label;

use crate::error::CliError;

use super::load_corpus;

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Corpus JSONL file
    #[arg(long)]
    pub corpus: PathBuf,
}

pub fn run(args: StatsArgs) -> Result<(), CliError> {
    let ds = load_corpus(&args.corpus)?;
    let stats = ds.label_stats();
    let width = Label::ALL
        .iter()
        .map(|l| l.as_str().len())
        .max()
        .unwrap_or(0);
    for label in Label::ALL {
        println!("{:<width$}  {:>6}", label.as_str(), stats.count(label));
    }
    println!("{:<width$}  {:>6}", "overall", stats.overall);
    Ok(())
}
