//! The training loop: epoch/batch orchestration, best-epoch snapshotting
//! by swept micro-F1, and probability prediction.
//!
//! The graph branch always runs a full-graph forward pass; the batch size
//! controls which nodes contribute to each step's loss. The linear
//! variant (lambda = 0, no graph) instead operates on row subsets, since
//! head rows are independent.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::features::{FeatureError, FeatureMatrix};
use crate::graph::{GraphError, PersonaGraph};
use crate::metrics::{threshold_sweep, MetricsError};
use crate::model::{
    adam_step, backward, bce_with_logits, bce_with_logits_rows, forward_full, head_backward_into,
    head_forward, sigmoid, AdamState, Gradients, ModelError, ModelParams, TrainConfig,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Which branches are trained and how the fusion weight is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Head only: lambda = 0, no graph required.
    Linear,
    /// Graph branch only: lambda = 1.
    Gnn,
    /// Weighted fusion with the configured lambda.
    Fused,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Linear => "linear",
            Variant::Gnn => "gnn",
            Variant::Fused => "fused",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "linear" => Some(Variant::Linear),
            "gnn" => Some(Variant::Gnn),
            "fused" => Some(Variant::Fused),
            _ => None,
        }
    }

    /// Fusion weight for this variant given the configured lambda.
    pub fn resolve_lambda(self, configured: f64) -> f64 {
        match self {
            Variant::Linear => 0.0,
            Variant::Gnn => 1.0,
            Variant::Fused => configured,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One epoch's training loss and evaluation score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub eval_f1: f64,
    pub threshold: f64,
}

/// Best-epoch parameters plus the full epoch history.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub best: EpochRecord,
    pub history: Vec<EpochRecord>,
}

fn validate_inputs(
    features: &FeatureMatrix,
    graph: Option<&PersonaGraph>,
    labels: &Array2<f64>,
    train_nodes: &[usize],
    eval_nodes: &[usize],
    variant: Variant,
) -> Result<(), TrainError> {
    let n = features.n_rows();
    if labels.nrows() != n {
        return Err(TrainError::InvalidInput(format!(
            "label matrix has {} rows for {} feature rows",
            labels.nrows(),
            n
        )));
    }
    if train_nodes.is_empty() {
        return Err(TrainError::InvalidInput("empty training mask".into()));
    }
    if eval_nodes.is_empty() {
        return Err(TrainError::InvalidInput("empty evaluation mask".into()));
    }
    for &i in train_nodes.iter().chain(eval_nodes.iter()) {
        if i >= n {
            return Err(TrainError::InvalidInput(format!(
                "mask index {i} out of range for {n} nodes"
            )));
        }
    }
    match graph {
        Some(g) => {
            if g.n_nodes() != n {
                return Err(TrainError::InvalidInput(format!(
                    "graph has {} nodes for {} feature rows",
                    g.n_nodes(),
                    n
                )));
            }
            if g.ids() != features.row_ids.as_slice() {
                return Err(TrainError::InvalidInput(
                    "graph ids do not match feature row ids".into(),
                ));
            }
        }
        None => {
            if variant != Variant::Linear {
                return Err(TrainError::InvalidInput(format!(
                    "variant {variant} requires a graph"
                )));
            }
        }
    }
    Ok(())
}

/// Train for `config.epochs` epochs and keep the parameter snapshot with
/// the highest threshold-swept micro-F1 on `eval_nodes`. `on_epoch` fires
/// once per epoch with the fresh record.
#[allow(clippy::too_many_arguments)]
pub fn train_model<F: FnMut(&EpochRecord)>(
    features: &FeatureMatrix,
    graph: Option<&PersonaGraph>,
    labels: &Array2<f64>,
    train_nodes: &[usize],
    eval_nodes: &[usize],
    config: &TrainConfig,
    variant: Variant,
    mut on_epoch: F,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    validate_inputs(features, graph, labels, train_nodes, eval_nodes, variant)?;

    let lambda = variant.resolve_lambda(config.lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParams::init_with_rng(
        features.dim(),
        config.hidden_dim,
        config.n_layers,
        lambda,
        config.dropout_rate,
        &mut rng,
    )?;
    let mut adam = AdamState::new(&params);
    let y_eval = labels.select(Axis(0), eval_nodes);

    let mut best: Option<(EpochRecord, ModelParams)> = None;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order = train_nodes.to_vec();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut loss_entries = 0usize;
        for batch in order.chunks(config.batch_size) {
            let loss = if variant == Variant::Linear {
                let x_batch = features.values.select(Axis(0), batch);
                let y_batch = labels.select(Axis(0), batch);
                let (z, cache) = head_forward(&x_batch, &params.head, Some(&mut rng))?;
                let loss = bce_with_logits(&z, &y_batch)?;
                let mut dz = Array2::zeros(z.dim());
                let scale = 1.0 / z.len() as f64;
                ndarray::Zip::from(&mut dz).and(&z).and(&y_batch).for_each(
                    |d, &z, &y| {
                        *d = (sigmoid(z) - y) * scale;
                    },
                );
                let mut grads = Gradients::zeros_like(&params);
                head_backward_into(&x_batch, &params.head, &cache, &dz, &mut grads);
                adam_step(&mut params, &grads, &mut adam, config.lr_head, config.lr_gnn);
                loss
            } else {
                let graph = graph.expect("validated above");
                let fwd = forward_full(&features.values, graph, &params, Some(&mut rng))?;
                let loss = bce_with_logits_rows(&fwd.z, labels, batch)?;
                let grads = backward(&features.values, graph, &params, &fwd, labels, batch);
                adam_step(&mut params, &grads, &mut adam, config.lr_head, config.lr_gnn);
                loss
            };
            loss_sum += loss * batch.len() as f64;
            loss_entries += batch.len();
        }
        let epoch_loss = loss_sum / loss_entries as f64;
        if !epoch_loss.is_finite() {
            return Err(TrainError::Diverged {
                epoch,
                loss: epoch_loss,
            });
        }

        let probs_eval = predict_rows(&params, features, graph, eval_nodes)?;
        let (threshold, eval_f1) = threshold_sweep(&probs_eval, &y_eval)?;
        let record = EpochRecord {
            epoch,
            loss: epoch_loss,
            eval_f1,
            threshold,
        };
        on_epoch(&record);
        history.push(record);
        if best.as_ref().is_none_or(|(b, _)| eval_f1 > b.eval_f1) {
            best = Some((record, params.clone()));
        }
    }

    let (best, params) = best.expect("epochs >= 1");
    Ok(TrainOutcome {
        params,
        best,
        history,
    })
}

/// Sigmoid of the fused logits in evaluation mode (no dropout), for the
/// requested rows only.
fn predict_rows(
    params: &ModelParams,
    features: &FeatureMatrix,
    graph: Option<&PersonaGraph>,
    rows: &[usize],
) -> Result<Array2<f64>, TrainError> {
    if params.lambda == 0.0 {
        let x = features.values.select(Axis(0), rows);
        let (z, _) = head_forward(&x, &params.head, None)?;
        return Ok(z.mapv(sigmoid));
    }
    let graph = graph.ok_or_else(|| {
        TrainError::InvalidInput("prediction with lambda > 0 requires a graph".into())
    })?;
    let fwd = forward_full(&features.values, graph, params, None)?;
    Ok(fwd.z.select(Axis(0), rows).mapv(sigmoid))
}

/// Label probabilities for every row: sigmoid of the fused logits,
/// evaluation mode.
pub fn predict_probabilities(
    params: &ModelParams,
    features: &FeatureMatrix,
    graph: Option<&PersonaGraph>,
) -> Result<Array2<f64>, TrainError> {
    let rows: Vec<usize> = (0..features.n_rows()).collect();
    predict_rows(params, features, graph, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, CosineScorer};
    use crate::model::combined_logits;
    use crate::synth::generate_synthetic_corpus;
    use approx::assert_abs_diff_eq;

    fn separable_setup(
        n: usize,
        seed: u64,
    ) -> (FeatureMatrix, PersonaGraph, Array2<f64>) {
        let (ds, features) = generate_synthetic_corpus(n, 8, 4, 0.0, seed).unwrap();
        let scorer = CosineScorer::new(&features);
        let graph = build_graph(&features, 5, &scorer).unwrap();
        let labels = ds.labels_to_matrix();
        (features, graph, labels)
    }

    #[test]
    fn separable_corpus_reaches_perfect_train_f1() {
        let (features, graph, labels) = separable_setup(80, 5);
        let nodes: Vec<usize> = (0..80).collect();
        let config = TrainConfig {
            epochs: 20,
            batch_size: 80,
            lr_head: 5e-3,
            lr_gnn: 1e-2,
            hidden_dim: 16,
            dropout_rate: 0.0,
            seed: 3,
            ..TrainConfig::default()
        };
        let outcome = train_model(
            &features,
            Some(&graph),
            &labels,
            &nodes,
            &nodes,
            &config,
            Variant::Fused,
            |_| {},
        )
        .unwrap();
        assert_abs_diff_eq!(outcome.best.eval_f1, 1.0, epsilon = 1e-12);
        assert!(outcome.best.epoch <= 20);
    }

    #[test]
    fn single_epoch_returns_that_snapshot() {
        let (features, graph, labels) = separable_setup(40, 9);
        let nodes: Vec<usize> = (0..40).collect();
        let config = TrainConfig {
            epochs: 1,
            hidden_dim: 8,
            seed: 1,
            ..TrainConfig::default()
        };
        let outcome = train_model(
            &features,
            Some(&graph),
            &labels,
            &nodes,
            &nodes,
            &config,
            Variant::Fused,
            |_| {},
        )
        .unwrap();
        assert_eq!(outcome.history.len(), 1);
        assert_eq!(outcome.best.epoch, 1);
    }

    #[test]
    fn linear_variant_trains_without_a_graph() {
        let (features, _, labels) = separable_setup(60, 11);
        let nodes: Vec<usize> = (0..60).collect();
        let config = TrainConfig {
            epochs: 120,
            batch_size: 60,
            lr_head: 1e-2,
            hidden_dim: 8,
            dropout_rate: 0.0,
            seed: 2,
            ..TrainConfig::default()
        };
        let outcome = train_model(
            &features,
            None,
            &labels,
            &nodes,
            &nodes,
            &config,
            Variant::Linear,
            |_| {},
        )
        .unwrap();
        assert!(outcome.best.eval_f1 > 0.9, "F1 = {}", outcome.best.eval_f1);
        // A graphless run of any other variant is rejected.
        let err = train_model(
            &features,
            None,
            &labels,
            &nodes,
            &nodes,
            &config,
            Variant::Fused,
            |_| {},
        )
        .unwrap_err();
        assert!(matches!(err, TrainError::InvalidInput(_)));
    }

    #[test]
    fn predict_matches_sigmoid_of_combined_logits() {
        let (features, graph, labels) = separable_setup(30, 21);
        let nodes: Vec<usize> = (0..30).collect();
        let config = TrainConfig {
            epochs: 2,
            hidden_dim: 8,
            seed: 8,
            ..TrainConfig::default()
        };
        let outcome = train_model(
            &features,
            Some(&graph),
            &labels,
            &nodes,
            &nodes,
            &config,
            Variant::Fused,
            |_| {},
        )
        .unwrap();
        let probs = predict_probabilities(&outcome.params, &features, Some(&graph)).unwrap();
        assert!(probs.iter().all(|&p| p > 0.0 && p < 1.0));

        let fwd = forward_full(&features.values, &graph, &outcome.params, None).unwrap();
        let z = combined_logits(&fwd.z_gnn, &fwd.z_enc, outcome.params.lambda).unwrap();
        for (p, &l) in probs.iter().zip(z.iter()) {
            assert_abs_diff_eq!(*p, sigmoid(l), epsilon = 1e-12);
        }
    }

    #[test]
    fn all_zero_logits_predict_one_half() {
        let (features, graph, _) = separable_setup(10, 33);
        let mut params = ModelParams::init(features.dim(), 8, 2, 0.7, 0.0, 0).unwrap();
        for (mut tensor, _) in params.tensors_mut() {
            for v in tensor.iter_mut() {
                *v = 0.0;
            }
        }
        let probs = predict_probabilities(&params, &features, Some(&graph)).unwrap();
        assert!(probs.iter().all(|&p| p == 0.5));
        assert!(sigmoid(10.0) > 0.9999);
    }

    #[test]
    fn divergence_is_reported_as_numerical_failure() {
        let (features, graph, labels) = separable_setup(20, 44);
        let nodes: Vec<usize> = (0..20).collect();
        let config = TrainConfig {
            epochs: 5,
            lr_head: 1e200,
            lr_gnn: 1e200,
            hidden_dim: 8,
            dropout_rate: 0.0,
            seed: 0,
            ..TrainConfig::default()
        };
        let err = train_model(
            &features,
            Some(&graph),
            &labels,
            &nodes,
            &nodes,
            &config,
            Variant::Fused,
            |_| {},
        )
        .unwrap_err();
        assert!(
            matches!(err, TrainError::Diverged { .. } | TrainError::Model(ModelError::NonFinite(_))),
            "unexpected error: {err:?}"
        );
    }

    #[test]
    fn training_is_deterministic_for_a_seed() {
        let (features, graph, labels) = separable_setup(30, 55);
        let nodes: Vec<usize> = (0..30).collect();
        let config = TrainConfig {
            epochs: 3,
            hidden_dim: 8,
            seed: 77,
            ..TrainConfig::default()
        };
        let run = || {
            train_model(
                &features,
                Some(&graph),
                &labels,
                &nodes,
                &nodes,
                &config,
                Variant::Fused,
                |_| {},
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.params, b.params);
        assert_eq!(a.history, b.history);
    }
}
