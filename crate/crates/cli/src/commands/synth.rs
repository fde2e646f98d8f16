use std::path::{Path, PathBuf};

use clap::Args;
use persona_graph::features::save_embeddings_jsonl;
use persona_graph::synth::generate_synthetic_corpus;

use crate::error::CliError;
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of statements
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Embedding dimension
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Cluster count (each cluster carries one multi-label pattern)
    #[arg(long, default_value_t = 8)]
    pub clusters: usize,
    /// Per-bit label flip probability
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output prefix: writes <out>.corpus.jsonl and <out>.embeddings.jsonl
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: SynthArgs) -> Result<(), CliError> {
    let (ds, features) = generate_synthetic_corpus(args.n, args.dim, args.clusters, args.noise, args.seed)?;

    let corpus_path = with_suffix(&args.out, ".corpus.jsonl");
    let embeddings_path = with_suffix(&args.out, ".embeddings.jsonl");

    let mut manifest = RunManifest::new("synth", args.seed);
    manifest.param("n", args.n);
    manifest.param("dim", args.dim);
    manifest.param("clusters", args.clusters);
    manifest.param("noise", args.noise);
    manifest.output(&corpus_path);
    manifest.output(&embeddings_path);

    ds.save_jsonl(&corpus_path)?;
    save_embeddings_jsonl(&features, &embeddings_path)?;
    manifest.write_beside(&args.out)?;

    let stats = ds.label_stats();
    println!(
        "synth: {} statements, {} clusters, dim {} -> {} / {}",
        args.n,
        args.clusters,
        args.dim,
        corpus_path.display(),
        embeddings_path.display()
    );
    println!("label totals: {:?} overall {}", stats.counts, stats.overall);
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    prefix.with_file_name(name)
}
