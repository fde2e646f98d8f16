//! Multi-label evaluation: micro- and macro-averaged precision, recall,
//! and F1 after thresholding, plus the threshold sweep that picks the
//! cutoff with the highest micro-F1.

use ndarray::Array2;
use thiserror::Error;

use crate::corpus::Label;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("threshold {0} out of range: must be in (0, 1)")]
    ThresholdOutOfRange(f64),
    #[error("shape mismatch: probabilities {probs:?} vs labels {labels:?}")]
    ShapeMismatch {
        probs: (usize, usize),
        labels: (usize, usize),
    },
}

/// Precision, recall, F1. Conventions: 0/0 counts as 0 throughout.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Prf {
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            tp as f64 / (tp + fn_) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

/// Micro metrics pool every (example, label) decision into one confusion
/// count; macro metrics average the per-label scores.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricSet {
    pub micro: Prf,
    pub macro_avg: Prf,
}

fn check_shapes(probs: &Array2<f64>, y: &Array2<f64>) -> Result<(), MetricsError> {
    if probs.dim() != y.dim() {
        return Err(MetricsError::ShapeMismatch {
            probs: probs.dim(),
            labels: y.dim(),
        });
    }
    Ok(())
}

fn metrics_at(probs: &Array2<f64>, y: &Array2<f64>, thresholds: &[f64]) -> MetricSet {
    let n_labels = probs.ncols();
    let mut tp = vec![0usize; n_labels];
    let mut fp = vec![0usize; n_labels];
    let mut fn_ = vec![0usize; n_labels];
    for r in 0..probs.nrows() {
        for c in 0..n_labels {
            let predicted = probs[[r, c]] >= thresholds[c.min(thresholds.len() - 1)];
            let actual = y[[r, c]] >= 0.5;
            match (predicted, actual) {
                (true, true) => tp[c] += 1,
                (true, false) => fp[c] += 1,
                (false, true) => fn_[c] += 1,
                (false, false) => {}
            }
        }
    }
    let micro = Prf::from_counts(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    let per_label: Vec<Prf> = (0..n_labels)
        .map(|c| Prf::from_counts(tp[c], fp[c], fn_[c]))
        .collect();
    let k = n_labels as f64;
    let macro_avg = Prf {
        precision: per_label.iter().map(|p| p.precision).sum::<f64>() / k,
        recall: per_label.iter().map(|p| p.recall).sum::<f64>() / k,
        f1: per_label.iter().map(|p| p.f1).sum::<f64>() / k,
    };
    MetricSet { micro, macro_avg }
}

/// Binarize at one global threshold (`prob >= threshold`) and score.
pub fn multilabel_metrics(
    probs: &Array2<f64>,
    y: &Array2<f64>,
    threshold: f64,
) -> Result<MetricSet, MetricsError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(MetricsError::ThresholdOutOfRange(threshold));
    }
    check_shapes(probs, y)?;
    Ok(metrics_at(probs, y, &[threshold]))
}

/// Binarize each label column at its own threshold and score.
pub fn multilabel_metrics_per_label(
    probs: &Array2<f64>,
    y: &Array2<f64>,
    thresholds: &[f64; Label::COUNT],
) -> Result<MetricSet, MetricsError> {
    for &t in thresholds {
        if !(t > 0.0 && t < 1.0) {
            return Err(MetricsError::ThresholdOutOfRange(t));
        }
    }
    check_shapes(probs, y)?;
    Ok(metrics_at(probs, y, thresholds))
}

/// The swept threshold grid: 0.01, 0.02, ..., 0.99.
pub fn threshold_grid() -> impl Iterator<Item = f64> {
    (1..=99).map(|i| i as f64 / 100.0)
}

/// Evaluate every grid threshold and return the one with the highest
/// micro-F1; ties go to the lower threshold.
pub fn threshold_sweep(probs: &Array2<f64>, y: &Array2<f64>) -> Result<(f64, f64), MetricsError> {
    check_shapes(probs, y)?;
    let mut best = (0.01, f64::NEG_INFINITY);
    for t in threshold_grid() {
        let f1 = metrics_at(probs, y, &[t]).micro.f1;
        if f1 > best.1 {
            best = (t, f1);
        }
    }
    Ok(best)
}

/// Per-label variant of the sweep: each column's threshold maximizes that
/// label's own F1.
pub fn threshold_sweep_per_label(
    probs: &Array2<f64>,
    y: &Array2<f64>,
) -> Result<[f64; Label::COUNT], MetricsError> {
    check_shapes(probs, y)?;
    let mut out = [0.01; Label::COUNT];
    for c in 0..Label::COUNT.min(probs.ncols()) {
        let mut best = (0.01, f64::NEG_INFINITY);
        for t in threshold_grid() {
            let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
            for r in 0..probs.nrows() {
                let predicted = probs[[r, c]] >= t;
                let actual = y[[r, c]] >= 0.5;
                match (predicted, actual) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
            let f1 = Prf::from_counts(tp, fp, fn_).f1;
            if f1 > best.1 {
                best = (t, f1);
            }
        }
        out[c] = best.0;
    }
    Ok(out)
}
