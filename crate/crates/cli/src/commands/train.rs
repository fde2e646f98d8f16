use std::path::PathBuf;

use clap::Args;
use persona_graph::experiment::split_train_test;
use persona_graph::graph::PersonaGraph;
use persona_graph::model::{save_checkpoint, CheckpointMeta, TrainConfig};
use persona_graph::train::{train_model, Variant};

use crate::error::CliError;
use crate::manifest::RunManifest;

use super::{load_corpus, load_features, FeatureKindArg, VariantArg};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus JSONL file
    #[arg(long)]
    pub corpus: PathBuf,
    /// Embedding file (format A or B) for the model input features
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FeatureKindArg::Embeddings)]
    pub feature_kind: FeatureKindArg,
    /// Graph JSON (ignored by --variant linear)
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = VariantArg::Fused)]
    pub variant: VariantArg,
    /// Fusion weight for the GNN branch
    #[arg(long, default_value_t = 0.7)]
    pub lambda: f64,
    /// Training epochs (default 20; 1000 for --variant linear)
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
    /// Share of nodes held out for evaluation
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub min_df: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output checkpoint path
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    let variant: Variant = args.variant.into();
    let epochs = args
        .epochs
        .unwrap_or(if variant == Variant::Linear { 1000 } else { 20 });
    if epochs == 0 {
        return Err(CliError::usage("--epochs must be >= 1"));
    }
    if variant != Variant::Linear && args.graph.is_none() {
        return Err(CliError::usage(format!(
            "--variant {} requires --graph <file>",
            variant
        )));
    }
    if !(args.test_fraction > 0.0 && args.test_fraction < 1.0) {
        return Err(CliError::usage(format!(
            "--test-fraction {} outside (0, 1)",
            args.test_fraction
        )));
    }

    let ds = load_corpus(&args.corpus)?;
    let features = load_features(args.feature_kind, &ds, args.embeddings.as_ref(), args.min_df)?;
    let graph = match (&args.graph, variant) {
        (_, Variant::Linear) => None,
        (Some(path), _) => Some(PersonaGraph::load(path)?),
        (None, _) => unreachable!("checked above"),
    };

    let config = TrainConfig {
        lr_head: args.lr_head,
        lr_gnn: args.lr_gnn,
        epochs,
        batch_size: args.batch_size,
        dropout_rate: args.dropout,
        hidden_dim: args.hidden_dim,
        n_layers: args.n_layers,
        lambda: args.lambda,
        seed: args.seed,
    };
    config.validate().map_err(|e| CliError::usage(e.to_string()))?;

    let labels = ds.labels_to_matrix();
    let (train_nodes, eval_nodes) = split_train_test(ds.len(), args.test_fraction, args.seed);
    println!(
        "training {} on {} nodes ({} train / {} eval), {} epochs",
        variant,
        ds.len(),
        train_nodes.len(),
        eval_nodes.len(),
        epochs
    );

    let stride = (epochs / 20).max(1);
    let outcome = train_model(
        &features,
        graph.as_ref(),
        &labels,
        &train_nodes,
        &eval_nodes,
        &config,
        variant,
        |rec| {
            if rec.epoch == 1 || rec.epoch % stride == 0 || rec.epoch == epochs {
                println!(
                    "epoch {:>4}/{epochs}  loss {:.6}  eval F1 {:.4} (threshold {:.2})",
                    rec.epoch, rec.loss, rec.eval_f1, rec.threshold
                );
            }
        },
    )?;
    println!(
        "best epoch {} with eval F1 {:.4} at threshold {:.2}",
        outcome.best.epoch, outcome.best.eval_f1, outcome.best.threshold
    );

    let meta = CheckpointMeta {
        in_dim: features.dim(),
        hidden_dim: args.hidden_dim,
        n_layers: args.n_layers,
        lambda: outcome.params.lambda,
        dropout_rate: args.dropout,
        seed: args.seed,
        epoch: outcome.best.epoch,
        threshold: outcome.best.threshold,
    };

    let mut manifest = RunManifest::new("train", args.seed);
    manifest.param("variant", variant.as_str());
    manifest.param("lambda", args.lambda);
    manifest.param("epochs", epochs);
    manifest.param("batch_size", args.batch_size);
    manifest.param("lr_head", args.lr_head);
    manifest.param("lr_gnn", args.lr_gnn);
    manifest.param("dropout", args.dropout);
    manifest.param("hidden_dim", args.hidden_dim);
    manifest.param("n_layers", args.n_layers);
    manifest.param("test_fraction", args.test_fraction);
    manifest.param("feature_kind", format!("{:?}", args.feature_kind).to_lowercase());
    manifest.input("corpus", &args.corpus)?;
    if let Some(emb) = &args.embeddings {
        manifest.input("embeddings", emb)?;
    }
    if let Some(g) = &args.graph {
        if variant != Variant::Linear {
            manifest.input("graph", g)?;
        }
    }
    manifest.output(&args.out);

    save_checkpoint(&args.out, &outcome.params, &meta)?;
    manifest.write_beside(&args.out)?;
    println!("checkpoint -> {}", args.out.display());
    Ok(())
}
