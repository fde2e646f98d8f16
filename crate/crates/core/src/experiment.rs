//! The fraction-sweep experiment grid: for every (variant, train
//! fraction, run) cell, subsample the train pool, train, evaluate on the
//! fixed test partition with a swept threshold, then aggregate mean and
//! standard deviation per cell.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use ndarray::Axis;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::features::{fit_vocabulary, tfidf_transform, bow_transform, FeatureMatrix};
use crate::graph::PersonaGraph;
use crate::metrics::{
    multilabel_metrics, multilabel_metrics_per_label, threshold_sweep, threshold_sweep_per_label,
};
use crate::model::TrainConfig;
use crate::train::{predict_probabilities, train_model, TrainError, Variant};

/// Where the model's input features come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Embeddings,
    Tfidf,
    Bow,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Embeddings => "embeddings",
            FeatureKind::Tfidf => "tfidf",
            FeatureKind::Bow => "bow",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureKind> {
        match s {
            "embeddings" => Some(FeatureKind::Embeddings),
            "tfidf" => Some(FeatureKind::Tfidf),
            "bow" => Some(FeatureKind::Bow),
            _ => None,
        }
    }
}

/// One model configuration in the grid: feature source times model kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub feature: FeatureKind,
    pub model: Variant,
}

impl fmt::Display for VariantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.feature.as_str(), self.model.as_str())
    }
}

/// Full description of an experiment grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub variants: Vec<VariantSpec>,
    pub fractions: Vec<f64>,
    pub runs: usize,
    pub base_seed: u64,
    /// Share of nodes held out as the fixed test partition.
    pub test_fraction: f64,
    /// Config for graph-bearing variants; the linear variant swaps in
    /// `linear_epochs` (frozen features converge slowly).
    pub config: TrainConfig,
    pub linear_epochs: usize,
    /// Minimum document frequency for tfidf/bow feature variants.
    pub min_df: usize,
    /// Drop edges touching test nodes during training and prediction.
    pub train_only_graph: bool,
    /// Select the best epoch on a held-out slice of the labeled nodes
    /// instead of the test partition.
    pub holdout_validation: bool,
    /// Sweep one threshold per label instead of a single global one.
    pub per_label_thresholds: bool,
}

impl Default for ExperimentSpec {
    fn default() -> ExperimentSpec {
        ExperimentSpec {
            variants: vec![
                VariantSpec {
                    feature: FeatureKind::Embeddings,
                    model: Variant::Fused,
                },
                VariantSpec {
                    feature: FeatureKind::Embeddings,
                    model: Variant::Linear,
                },
            ],
            fractions: vec![1.0],
            runs: 10,
            base_seed: 0,
            test_fraction: 0.2,
            config: TrainConfig::default(),
            linear_epochs: 1000,
            min_df: 1,
            train_only_graph: false,
            holdout_validation: false,
            per_label_thresholds: false,
        }
    }
}

/// One (variant, fraction, run) cell's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub variant: String,
    pub fraction: f64,
    pub run_seed: u64,
    pub threshold: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub macro_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub best_epoch: usize,
    pub train_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub mean: f64,
    pub std: f64,
}

/// Population mean/std over the runs of one cell.
fn aggregate(values: &[f64]) -> MetricAggregate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MetricAggregate {
        mean,
        std: var.sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub variant: String,
    pub fraction: f64,
    pub runs: usize,
    pub f1: MetricAggregate,
    pub precision: MetricAggregate,
    pub recall: MetricAggregate,
    pub macro_f1: MetricAggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub base_seed: u64,
    pub test_fraction: f64,
    pub n_nodes: usize,
    pub n_train_pool: usize,
    pub n_test: usize,
    pub cells: Vec<CellReport>,
    pub records: Vec<MetricsRecord>,
}

impl ExperimentReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        fs::write(path, self.to_json_string())
    }

    /// Mean F1 of one cell, if present.
    pub fn cell_mean_f1(&self, variant: &str, fraction: f64) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.variant == variant && c.fraction == fraction)
            .map(|c| c.f1.mean)
    }

    /// Aligned text table grouped by fraction, best F1 first within each
    /// group.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<8} {:<22} {:>8} {:>8} {:>10} {:>8} {:>8} {:>8}\n",
            "% train", "model", "F1", "std", "Precision", "std", "Recall", "std"
        ));
        let mut fractions: Vec<f64> = Vec::new();
        for cell in &self.cells {
            if !fractions.contains(&cell.fraction) {
                fractions.push(cell.fraction);
            }
        }
        fractions.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (gi, &fraction) in fractions.iter().enumerate() {
            if gi > 0 {
                out.push('\n');
            }
            let mut group: Vec<&CellReport> = self
                .cells
                .iter()
                .filter(|c| c.fraction == fraction)
                .collect();
            group.sort_by(|a, b| b.f1.mean.partial_cmp(&a.f1.mean).unwrap());
            for (i, cell) in group.iter().enumerate() {
                let label = if i == 0 {
                    let pct = format!("{:.2}", fraction * 100.0);
                    format!("{}%", pct.trim_end_matches('0').trim_end_matches('.'))
                } else {
                    String::new()
                };
                out.push_str(&format!(
                    "{:<8} {:<22} {:>8.4} {:>8.4} {:>10.4} {:>8.4} {:>8.4} {:>8.4}\n",
                    label,
                    cell.variant,
                    cell.f1.mean,
                    cell.f1.std,
                    cell.precision.mean,
                    cell.precision.std,
                    cell.recall.mean,
                    cell.recall.std,
                ));
            }
        }
        out
    }
}

/// Deterministically pick `ceil(fraction * pool.len())` entries of `pool`
/// (preserving order) under the given seed.
pub fn subsample_indices(pool: &[usize], fraction: f64, seed: u64) -> Vec<usize> {
    if fraction >= 1.0 {
        return pool.to_vec();
    }
    let take = ((fraction * pool.len() as f64).ceil() as usize).clamp(1, pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, pool.len(), take).into_vec();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| pool[i]).collect()
}

/// Split node indices into (train pool, test partition); the test side has
/// `ceil(test_fraction * n)` nodes drawn under `seed`.
pub fn split_train_test(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let take = ((test_fraction * n as f64).ceil() as usize).clamp(1, n.saturating_sub(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let test: BTreeSet<usize> = rand::seq::index::sample(&mut rng, n, take)
        .into_iter()
        .collect();
    let train = (0..n).filter(|i| !test.contains(i)).collect();
    (train, test.into_iter().collect())
}

fn features_for(
    kind: FeatureKind,
    corpus: &Dataset,
    embeddings: Option<&FeatureMatrix>,
    min_df: usize,
) -> Result<FeatureMatrix, TrainError> {
    match kind {
        FeatureKind::Embeddings => embeddings.cloned().ok_or_else(|| {
            TrainError::InvalidInput("embeddings variant requested but none provided".into())
        }),
        FeatureKind::Tfidf => {
            let vocab = fit_vocabulary(corpus, min_df)?;
            Ok(tfidf_transform(corpus, &vocab))
        }
        FeatureKind::Bow => {
            let vocab = fit_vocabulary(corpus, min_df)?;
            Ok(bow_transform(corpus, &vocab))
        }
    }
}

/// Run the full grid. Cells are independent and may execute in parallel;
/// results are deterministic for a fixed `base_seed` regardless of
/// scheduling.
pub fn run_experiment(
    corpus: &Dataset,
    embeddings: Option<&FeatureMatrix>,
    graph: &PersonaGraph,
    spec: &ExperimentSpec,
) -> Result<ExperimentReport, TrainError> {
    if spec.runs < 1 {
        return Err(TrainError::InvalidInput("runs must be >= 1".into()));
    }
    if spec.variants.is_empty() {
        return Err(TrainError::InvalidInput("no variants requested".into()));
    }
    for &f in &spec.fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(TrainError::InvalidInput(format!(
                "fraction {f} outside (0, 1]"
            )));
        }
    }
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(TrainError::InvalidInput(format!(
            "test_fraction {} outside (0, 1)",
            spec.test_fraction
        )));
    }
    let n = corpus.len();
    if n < 2 {
        return Err(TrainError::InvalidInput("corpus too small".into()));
    }
    if graph.n_nodes() != n || graph.ids() != corpus.ids().as_slice() {
        return Err(TrainError::InvalidInput(
            "graph ids do not match corpus ids".into(),
        ));
    }
    if let Some(e) = embeddings {
        if e.row_ids != corpus.ids() {
            return Err(TrainError::InvalidInput(
                "embedding row ids do not match corpus ids".into(),
            ));
        }
    }

    let labels = corpus.labels_to_matrix();
    let (train_pool, test_nodes) = split_train_test(n, spec.test_fraction, spec.base_seed);
    let scoped_graph = if spec.train_only_graph {
        let pool: BTreeSet<usize> = train_pool.iter().copied().collect();
        graph.filter_nodes(|v| pool.contains(&v))
    } else {
        graph.clone()
    };

    // Feature matrices are shared across cells, computed once per kind.
    let mut kinds: Vec<FeatureKind> = Vec::new();
    for v in &spec.variants {
        if !kinds.contains(&v.feature) {
            kinds.push(v.feature);
        }
    }
    let mut feature_sets = Vec::new();
    for kind in &kinds {
        feature_sets.push((*kind, features_for(*kind, corpus, embeddings, spec.min_df)?));
    }
    fn features_of(sets: &[(FeatureKind, FeatureMatrix)], kind: FeatureKind) -> &FeatureMatrix {
        &sets.iter().find(|(k, _)| *k == kind).unwrap().1
    }

    let mut cells: Vec<(VariantSpec, f64, usize)> = Vec::new();
    for variant in &spec.variants {
        for &fraction in &spec.fractions {
            for run in 0..spec.runs {
                cells.push((*variant, fraction, run));
            }
        }
    }

    let records: Vec<MetricsRecord> = cells
        .par_iter()
        .map(|&(variant, fraction, run)| {
            run_cell(
                variant,
                fraction,
                run,
                spec,
                features_of(&feature_sets, variant.feature),
                &scoped_graph,
                &labels,
                &train_pool,
                &test_nodes,
            )
        })
        .collect::<Result<Vec<_>, TrainError>>()?;

    let mut cell_reports = Vec::new();
    for variant in &spec.variants {
        for &fraction in &spec.fractions {
            let cell: Vec<&MetricsRecord> = records
                .iter()
                .filter(|r| r.variant == variant.to_string() && r.fraction == fraction)
                .collect();
            let pick = |f: fn(&MetricsRecord) -> f64| -> Vec<f64> {
                cell.iter().map(|r| f(r)).collect()
            };
            cell_reports.push(CellReport {
                variant: variant.to_string(),
                fraction,
                runs: cell.len(),
                f1: aggregate(&pick(|r| r.f1)),
                precision: aggregate(&pick(|r| r.precision)),
                recall: aggregate(&pick(|r| r.recall)),
                macro_f1: aggregate(&pick(|r| r.macro_f1)),
            });
        }
    }

    Ok(ExperimentReport {
        base_seed: spec.base_seed,
        test_fraction: spec.test_fraction,
        n_nodes: n,
        n_train_pool: train_pool.len(),
        n_test: test_nodes.len(),
        cells: cell_reports,
        records,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    variant: VariantSpec,
    fraction: f64,
    run: usize,
    spec: &ExperimentSpec,
    features: &FeatureMatrix,
    graph: &PersonaGraph,
    labels: &ndarray::Array2<f64>,
    train_pool: &[usize],
    test_nodes: &[usize],
) -> Result<MetricsRecord, TrainError> {
    let run_seed = spec.base_seed.wrapping_add(run as u64);
    let labeled = subsample_indices(train_pool, fraction, run_seed);

    // Best-epoch selection split: the test partition by default, or a
    // carved-out tenth of the labeled nodes when holdout validation is on.
    let (fit_nodes, eval_nodes): (Vec<usize>, Vec<usize>) = if spec.holdout_validation {
        let held = subsample_indices(&labeled, 0.1, run_seed.wrapping_add(0x9e37));
        let held_set: BTreeSet<usize> = held.iter().copied().collect();
        let fit: Vec<usize> = labeled
            .iter()
            .copied()
            .filter(|i| !held_set.contains(i))
            .collect();
        if fit.is_empty() {
            (labeled.clone(), held)
        } else {
            (fit, held)
        }
    } else {
        (labeled.clone(), test_nodes.to_vec())
    };

    let mut config = spec.config.clone();
    config.seed = run_seed;
    if variant.model == Variant::Linear {
        config.epochs = spec.linear_epochs;
    }
    let graph_opt = (variant.model != Variant::Linear).then_some(graph);

    let outcome = train_model(
        features,
        graph_opt,
        labels,
        &fit_nodes,
        &eval_nodes,
        &config,
        variant.model,
        |_| {},
    )?;

    let probs = predict_probabilities(&outcome.params, features, graph_opt)?;
    let probs_test = probs.select(Axis(0), test_nodes);
    let y_test = labels.select(Axis(0), test_nodes);
    let (threshold, metrics) = if spec.per_label_thresholds {
        let ts = threshold_sweep_per_label(&probs_test, &y_test)?;
        let m = multilabel_metrics_per_label(&probs_test, &y_test, &ts)?;
        (ts.iter().sum::<f64>() / ts.len() as f64, m)
    } else {
        let (t, _) = threshold_sweep(&probs_test, &y_test)?;
        (t, multilabel_metrics(&probs_test, &y_test, t)?)
    };

    Ok(MetricsRecord {
        variant: variant.to_string(),
        fraction,
        run_seed,
        threshold,
        f1: metrics.micro.f1,
        precision: metrics.micro.precision,
        recall: metrics.micro.recall,
        macro_f1: metrics.macro_avg.f1,
        macro_precision: metrics.macro_avg.precision,
        macro_recall: metrics.macro_avg.recall,
        best_epoch: outcome.best.epoch,
        train_nodes: fit_nodes.len(),
    })
}
