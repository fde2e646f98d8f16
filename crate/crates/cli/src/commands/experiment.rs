use std::path::PathBuf;

use clap::Args;
use persona_graph::experiment::{run_experiment, ExperimentSpec, VariantSpec};
use persona_graph::graph::PersonaGraph;
use persona_graph::model::TrainConfig;

use crate::error::CliError;
use crate::manifest::RunManifest;

use super::{load_corpus, load_features, FeatureKindArg, VariantArg};

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Corpus JSONL file
    #[arg(long)]
    pub corpus: PathBuf,
    /// Embedding file (format A or B) for the model input features
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FeatureKindArg::Embeddings)]
    pub feature_kind: FeatureKindArg,
    /// Graph JSON built by `build-graph`
    #[arg(long)]
    pub graph: PathBuf,
    /// Comma-separated train fractions
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.3,0.5,0.7,1.0")]
    pub fractions: Vec<f64>,
    /// Runs per (variant, fraction) cell
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Comma-separated model kinds to compare
    #[arg(long, value_enum, value_delimiter = ',', default_value = "fused,linear")]
    pub variants: Vec<VariantArg>,
    #[arg(long, default_value_t = 0.7)]
    pub lambda: f64,
    /// Epochs for every variant (default: 20, but 1000 for linear)
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 2e-4)]
    pub lr_head: f64,
    #[arg(long, default_value_t = 2e-3)]
    pub lr_gnn: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dropout: f64,
    #[arg(long, default_value_t = 64)]
    pub hidden_dim: usize,
    #[arg(long, default_value_t = 2)]
    pub n_layers: usize,
    /// Share of nodes held out as the fixed test partition
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub min_df: usize,
    /// Worker threads for independent grid cells
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Drop edges touching test nodes
    #[arg(long)]
    pub train_only_graph: bool,
    /// Select best epochs on held-out labeled nodes instead of the test set
    #[arg(long)]
    pub holdout_validation: bool,
    /// Sweep one threshold per label
    #[arg(long)]
    pub per_label_thresholds: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output report JSON path
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: ExperimentArgs) -> Result<(), CliError> {
    if let Some(0) = args.epochs {
        return Err(CliError::usage("--epochs must be >= 1"));
    }
    if args.jobs == 0 {
        return Err(CliError::usage("--jobs must be >= 1"));
    }
    if args.variants.is_empty() {
        return Err(CliError::usage("--variants must name at least one model"));
    }

    let ds = load_corpus(&args.corpus)?;
    // tfidf/bow variants are recomputed inside the runner; only an
    // embedding file needs loading here.
    let embeddings = match args.feature_kind {
        FeatureKindArg::Embeddings => Some(load_features(
            args.feature_kind,
            &ds,
            args.embeddings.as_ref(),
            args.min_df,
        )?),
        _ => None,
    };
    let graph = PersonaGraph::load(&args.graph)?;

    let spec = ExperimentSpec {
        variants: args
            .variants
            .iter()
            .map(|&v| VariantSpec {
                feature: args.feature_kind.into(),
                model: v.into(),
            })
            .collect(),
        fractions: args.fractions.clone(),
        runs: args.runs,
        base_seed: args.seed,
        test_fraction: args.test_fraction,
        config: TrainConfig {
            lr_head: args.lr_head,
            lr_gnn: args.lr_gnn,
            epochs: args.epochs.unwrap_or(20),
            batch_size: args.batch_size,
            dropout_rate: args.dropout,
            hidden_dim: args.hidden_dim,
            n_layers: args.n_layers,
            lambda: args.lambda,
            seed: args.seed,
        },
        linear_epochs: args.epochs.unwrap_or(1000),
        min_df: args.min_df,
        train_only_graph: args.train_only_graph,
        holdout_validation: args.holdout_validation,
        per_label_thresholds: args.per_label_thresholds,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::data(format!("failed to build thread pool: {e}")))?;
    let report = pool.install(|| run_experiment(&ds, embeddings.as_ref(), &graph, &spec))?;

    print!("{}", report.render_table());

    let mut manifest = RunManifest::new("experiment", args.seed);
    manifest.param("fractions", &args.fractions);
    manifest.param("runs", args.runs);
    manifest.param(
        "variants",
        spec.variants.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
    );
    manifest.param("lambda", args.lambda);
    manifest.param("epochs", spec.config.epochs);
    manifest.param("linear_epochs", spec.linear_epochs);
    manifest.param("batch_size", args.batch_size);
    manifest.param("lr_head", args.lr_head);
    manifest.param("lr_gnn", args.lr_gnn);
    manifest.param("dropout", args.dropout);
    manifest.param("hidden_dim", args.hidden_dim);
    manifest.param("n_layers", args.n_layers);
    manifest.param("test_fraction", args.test_fraction);
    manifest.param("train_only_graph", args.train_only_graph);
    manifest.param("holdout_validation", args.holdout_validation);
    manifest.param("per_label_thresholds", args.per_label_thresholds);
    manifest.param("jobs", args.jobs);
    manifest.input("corpus", &args.corpus)?;
    if let Some(emb) = &args.embeddings {
        manifest.input("embeddings", emb)?;
    }
    manifest.input("graph", &args.graph)?;
    manifest.output(&args.out);

    report
        .save_json(&args.out)
        .map_err(|e| CliError::data(format!("failed to write {}: {e}", args.out.display())))?;
    manifest.write_beside(&args.out)?;
    println!("report -> {}", args.out.display());
    Ok(())
}
