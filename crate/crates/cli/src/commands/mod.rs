//! Subcommand implementations and shared flag types.

pub mod build_graph;
pub mod experiment;
pub mod stats;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use clap::ValueEnum;

use persona_graph::corpus::Dataset;
use persona_graph::experiment::FeatureKind;
use persona_graph::features::{
    bow_transform, fit_vocabulary, load_embeddings, tfidf_transform, FeatureMatrix,
};
use persona_graph::train::Variant;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Linear,
    Gnn,
    Fused,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Linear => Variant::Linear,
            VariantArg::Gnn => Variant::Gnn,
            VariantArg::Fused => Variant::Fused,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureKindArg {
    Embeddings,
    Tfidf,
    Bow,
}

impl From<FeatureKindArg> for FeatureKind {
    fn from(k: FeatureKindArg) -> FeatureKind {
        match k {
            FeatureKindArg::Embeddings => FeatureKind::Embeddings,
            FeatureKindArg::Tfidf => FeatureKind::Tfidf,
            FeatureKindArg::Bow => FeatureKind::Bow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerArg {
    Cosine,
    #[value(name = "nli-file")]
    NliFile,
}

/// Resolve the model/graph input features for a corpus.
pub fn load_features(
    kind: FeatureKindArg,
    corpus: &Dataset,
    embeddings: Option<&PathBuf>,
    min_df: usize,
) -> Result<FeatureMatrix, CliError> {
    match kind {
        FeatureKindArg::Embeddings => {
            let path = embeddings.ok_or_else(|| {
                CliError::usage(
                    "--feature-kind embeddings requires --embeddings <file> \
                     (or pick --feature-kind tfidf|bow)",
                )
            })?;
            Ok(load_embeddings(path, corpus)?)
        }
        FeatureKindArg::Tfidf => {
            let vocab = fit_vocabulary(corpus, min_df)?;
            Ok(tfidf_transform(corpus, &vocab))
        }
        FeatureKindArg::Bow => {
            let vocab = fit_vocabulary(corpus, min_df)?;
            Ok(bow_transform(corpus, &vocab))
        }
    }
}

pub fn load_corpus(path: &Path) -> Result<Dataset, CliError> {
    let ds = Dataset::load_jsonl(path)?;
    if ds.is_empty() {
        return Err(CliError::data(format!(
            "corpus {} has no records",
            path.display()
        )));
    }
    Ok(ds)
}
