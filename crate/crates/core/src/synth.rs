//! Synthetic cluster corpora: Gaussian clusters in feature space, each
//! carrying a fixed multi-label pattern, with independent label-bit noise.
//! Semantically close rows share labels by construction, which is the
//! structural premise the graph pipeline exploits.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::corpus::{Dataset, LabelSet, PersonaRecord, SplitTag};
use crate::features::FeatureMatrix;

const CENTER_SCALE: f64 = 10.0;
const CLUSTER_SIGMA: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("need at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("need dim >= cluster_count to separate {clusters} clusters in {dim} dimensions")]
    DimTooSmall { clusters: usize, dim: usize },
    #[error("label_noise {0} out of range [0, 0.5)")]
    NoiseOutOfRange(f64),
    #[error("need n >= 1")]
    EmptyCorpus,
}

/// Multi-label pattern of a cluster: a deterministic non-empty 5-bit mask.
fn cluster_pattern(cluster: usize) -> LabelSet {
    LabelSet::from_bits((cluster % 31) as u8 + 1)
}

/// Flip each of the 5 label bits independently with probability `noise`,
/// redrawing in the rare case every set bit gets cleared (records must
/// keep at least one label).
fn noisy_labels(pattern: LabelSet, noise: f64, rng: &mut ChaCha8Rng) -> LabelSet {
    if noise == 0.0 {
        return pattern;
    }
    loop {
        let mut bits = pattern.bits();
        for bit in 0..5u8 {
            if rng.random::<f64>() < noise {
                bits ^= 1 << bit;
            }
        }
        let flipped = LabelSet::from_bits(bits);
        if !flipped.is_empty() {
            return flipped;
        }
    }
}

/// Generate `n` statements in `cluster_count` well-separated Gaussian
/// clusters (centers on scaled one-hot axes), assigning each cluster a
/// multi-label pattern and flipping label bits with probability
/// `label_noise`. Deterministic for a fixed seed.
pub fn generate_synthetic_corpus(
    n: usize,
    dim: usize,
    cluster_count: usize,
    label_noise: f64,
    seed: u64,
) -> Result<(Dataset, FeatureMatrix), SynthError> {
    if cluster_count < 2 {
        return Err(SynthError::TooFewClusters(cluster_count));
    }
    if dim < cluster_count {
        return Err(SynthError::DimTooSmall {
            clusters: cluster_count,
            dim,
        });
    }
    if !(0.0..0.5).contains(&label_noise) {
        return Err(SynthError::NoiseOutOfRange(label_noise));
    }
    if n == 0 {
        return Err(SynthError::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::zeros((n, dim));
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let cluster = i % cluster_count;
        for j in 0..dim {
            let center = if j == cluster { CENTER_SCALE } else { 0.0 };
            let jitter: f64 = rng.sample(StandardNormal);
            values[[i, j]] = center + CLUSTER_SIGMA * jitter;
        }
        records.push(PersonaRecord {
            id: format!("s{i:05}"),
            text: format!("i often mention topic{cluster} in statement {i}"),
            labels: noisy_labels(cluster_pattern(cluster), label_noise, &mut rng),
        });
    }
    let ds = Dataset::new(records, SplitTag::Train);
    let features = FeatureMatrix {
        row_ids: ds.ids(),
        values,
    };
    Ok((ds, features))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    #[test]
    fn noise_free_corpus_is_one_nn_separable() {
        let (ds, features) = generate_synthetic_corpus(200, 8, 4, 0.0, 3).unwrap();
        // Leave-one-out 1-NN by euclidean distance predicts exact label sets.
        for i in 0..ds.len() {
            let mut best = (f64::INFINITY, usize::MAX);
            for j in 0..ds.len() {
                if i == j {
                    continue;
                }
                let d: f64 = features
                    .row(i)
                    .iter()
                    .zip(features.row(j).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d < best.0 {
                    best = (d, j);
                }
            }
            assert_eq!(ds.records[i].labels, ds.records[best.1].labels);
        }
    }

    #[test]
    fn measured_flip_rate_matches_noise() {
        let noise = 0.2;
        let n = 2000; // 10k label bits
        let (ds, _) = generate_synthetic_corpus(n, 8, 4, noise, 9).unwrap();
        let mut flipped = 0usize;
        for (i, record) in ds.records.iter().enumerate() {
            let clean = cluster_pattern(i % 4);
            for label in Label::ALL {
                if record.labels.contains(label) != clean.contains(label) {
                    flipped += 1;
                }
            }
        }
        let rate = flipped as f64 / (n * 5) as f64;
        assert!((rate - noise).abs() < 0.02, "flip rate {rate}");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_synthetic_corpus(50, 8, 4, 0.1, 7).unwrap();
        let b = generate_synthetic_corpus(50, 8, 4, 0.1, 7).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let c = generate_synthetic_corpus(50, 8, 4, 0.1, 8).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn labels_are_never_empty_even_under_noise() {
        let (ds, _) = generate_synthetic_corpus(3000, 8, 8, 0.4, 5).unwrap();
        assert!(ds.records.iter().all(|r| !r.labels.is_empty()));
    }

    #[test]
    fn degenerate_parameters_are_rejected() {
        assert!(matches!(
            generate_synthetic_corpus(10, 8, 1, 0.0, 0),
            Err(SynthError::TooFewClusters(1))
        ));
        assert!(matches!(
            generate_synthetic_corpus(10, 4, 8, 0.0, 0),
            Err(SynthError::DimTooSmall { .. })
        ));
        assert!(matches!(
            generate_synthetic_corpus(10, 8, 4, 0.5, 0),
            Err(SynthError::NoiseOutOfRange(_))
        ));
        assert!(matches!(
            generate_synthetic_corpus(0, 8, 4, 0.0, 0),
            Err(SynthError::EmptyCorpus)
        ));
    }

    #[test]
    fn cluster_patterns_are_distinct_nonempty_masks() {
        let seen: Vec<u8> = (0..8).map(|c| cluster_pattern(c).bits()).collect();
        for (i, &a) in seen.iter().enumerate() {
            assert!(a != 0);
            for &b in &seen[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }
}
