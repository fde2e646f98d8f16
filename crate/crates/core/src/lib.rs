//! Multi-label classification of short persona statements ("I have 4
//! children", "I love swimming") into five classes, using a weighted
//! semantic k-NN graph and a GraphSAGE network whose logits are fused
//! with a classifier-head branch.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`corpus`] — load and validate the labeled statement corpus.
//! 2. [`features`] — per-statement feature vectors: BOW, TF-IDF, or
//!    precomputed embeddings ingested from files.
//! 3. [`graph`] — exact k-NN neighbor identification over the features,
//!    pair scoring (precomputed entailment scores or a cosine fallback),
//!    and assembly of the weighted undirected graph.
//! 4. [`model`] / [`train`] / [`experiment`] — a two-layer GraphSAGE
//!    stack plus a dense classifier head, trained with hand-written
//!    backpropagation and Adam, evaluated with threshold-swept
//!    micro/macro F1 over a fraction-sweep experiment grid.
//!
//! Synthetic cluster corpora for end-to-end checks live in [`synth`].

pub mod corpus;
pub mod experiment;
pub mod features;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod synth;
pub mod train;

pub use corpus::{Dataset, Label, LabelSet, LabelStats, PersonaRecord, SplitTag};
pub use experiment::{ExperimentReport, ExperimentSpec, FeatureKind, MetricsRecord, VariantSpec};
pub use features::{FeatureMatrix, Vocabulary};
pub use graph::{CosineScorer, EdgeScorer, PersonaGraph, PrecomputedScorer};
pub use metrics::{MetricSet, Prf};
pub use model::{ModelParams, TrainConfig};
pub use train::{TrainOutcome, Variant};
