use std::path::PathBuf;

use clap::Args;
use persona_graph::graph::{build_graph, CosineScorer, EdgeScorer, PrecomputedScorer};

use crate::error::CliError;
use crate::manifest::RunManifest;

use super::{load_corpus, load_features, FeatureKindArg, ScorerArg};

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    /// Corpus JSONL file
    #[arg(long)]
    pub corpus: PathBuf,
    /// Embedding file (format A or B) providing the graph features
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Feature source for neighbor identification
    #[arg(long, value_enum, default_value_t = FeatureKindArg::Embeddings)]
    pub feature_kind: FeatureKindArg,
    /// Neighbors per node
    #[arg(long, default_value_t = 7)]
    pub k: usize,
    /// Edge weighting scheme
    #[arg(long, value_enum, default_value_t = ScorerArg::Cosine)]
    pub scorer: ScorerArg,
    /// Pair-score JSONL file (required with --scorer nli-file)
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Minimum document frequency for tfidf/bow features
    #[arg(long, default_value_t = 1)]
    pub min_df: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output graph JSON path
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: BuildGraphArgs) -> Result<(), CliError> {
    if args.scorer == ScorerArg::NliFile && args.scores.is_none() {
        return Err(CliError::usage(
            "--scorer nli-file requires --scores <file>",
        ));
    }
    let ds = load_corpus(&args.corpus)?;
    let features = load_features(args.feature_kind, &ds, args.embeddings.as_ref(), args.min_df)?;

    let graph = match args.scorer {
        ScorerArg::Cosine => {
            let scorer = CosineScorer::new(&features);
            build_graph(&features, args.k, &scorer)?
        }
        ScorerArg::NliFile => {
            let scores_path = args.scores.as_ref().expect("checked above");
            let scorer = PrecomputedScorer::load(scores_path, &features.row_ids)?;
            let scorer: &dyn EdgeScorer = &scorer;
            build_graph(&features, args.k, scorer)?
        }
    };

    let mut manifest = RunManifest::new("build-graph", args.seed);
    manifest.param("k", args.k);
    manifest.param("scorer", format!("{:?}", args.scorer).to_lowercase());
    manifest.param("feature_kind", format!("{:?}", args.feature_kind).to_lowercase());
    manifest.param("min_df", args.min_df);
    manifest.input("corpus", &args.corpus)?;
    if let Some(emb) = &args.embeddings {
        manifest.input("embeddings", emb)?;
    }
    if let Some(scores) = &args.scores {
        manifest.input("scores", scores)?;
    }
    manifest.output(&args.out);

    graph.save(&args.out)?;
    manifest.write_beside(&args.out)?;
    println!(
        "graph: {} nodes, {} edges -> {}",
        graph.n_nodes(),
        graph.n_edges(),
        args.out.display()
    );
    Ok(())
}
