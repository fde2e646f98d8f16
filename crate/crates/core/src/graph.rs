//! The weighted undirected persona graph: exact k-NN neighbor
//! identification by cosine similarity, within-neighborhood pair scoring,
//! and graph assembly.
//!
//! Edge weighting is pluggable through [`EdgeScorer`]. Two scorers are
//! built in: [`PrecomputedScorer`] reads directional pair scores produced
//! offline (e.g. by an entailment classifier), [`CosineScorer`] maps cosine
//! similarity onto `[0, 1]`. Directional scores are symmetrized by taking
//! the mean of both directions. Every k-NN edge is retained, whatever its
//! weight.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use ndarray::ArrayView1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("k = {k} out of range for {n} nodes (need 1 <= k < n)")]
    KOutOfRange { k: usize, n: usize },
    #[error("missing score for pair ({src}, {dst})")]
    MissingPairScore { src: String, dst: String },
    #[error("score {score} for pair ({src}, {dst}) outside [0, 1]")]
    ScoreOutOfRange { src: String, dst: String, score: f64 },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed JSON: {source}")]
    MalformedLine {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

/// One entry of a node's neighbor list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub similarity: f64,
}

/// Per-node neighbor lists, each sorted by descending similarity with ties
/// broken by ascending index.
pub type NeighborLists = Vec<Vec<Neighbor>>;

/// Symmetrized score for an unordered node pair, with `src < dst`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeScore {
    pub src: usize,
    pub dst: usize,
    pub score: f64,
}

fn dot_seq(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Cosine similarity `dot(a, b) / (|a| |b|)`; defined as 0 when either
/// vector is zero.
pub fn cosine_similarity(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64, GraphError> {
    if a.len() != b.len() {
        return Err(GraphError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let na = dot_seq(a, a).sqrt();
    let nb = dot_seq(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot_seq(a, b) / (na * nb))
}

fn neighbor_order(a: &Neighbor, b: &Neighbor) -> std::cmp::Ordering {
    b.similarity
        .partial_cmp(&a.similarity)
        .expect("similarities are finite")
        .then(a.index.cmp(&b.index))
}

/// For every node, the `k` other nodes with highest cosine similarity.
pub fn knn_neighbors(features: &FeatureMatrix, k: usize) -> Result<NeighborLists, GraphError> {
    let n = features.n_rows();
    if k < 1 || k >= n {
        return Err(GraphError::KOutOfRange { k, n });
    }
    let norms: Vec<f64> = (0..n)
        .map(|i| dot_seq(features.row(i), features.row(i)).sqrt())
        .collect();
    let lists = (0..n)
        .into_par_iter()
        .map(|v| {
            let row_v = features.row(v);
            let mut candidates: Vec<Neighbor> = (0..n)
                .filter(|&u| u != v)
                .map(|u| {
                    let similarity = if norms[v] == 0.0 || norms[u] == 0.0 {
                        0.0
                    } else {
                        dot_seq(row_v, features.row(u)) / (norms[v] * norms[u])
                    };
                    Neighbor {
                        index: u,
                        similarity,
                    }
                })
                .collect();
            candidates.select_nth_unstable_by(k - 1, neighbor_order);
            candidates.truncate(k);
            candidates.sort_unstable_by(neighbor_order);
            candidates
        })
        .collect();
    Ok(lists)
}

/// Directional similarity score in `[0, 1]` for a pair of nodes.
pub trait EdgeScorer: Sync {
    fn score(&self, src: usize, dst: usize) -> Result<f64, GraphError>;
}

/// Fallback scorer: cosine similarity mapped to `[0, 1]` via `(1 + cos) / 2`.
pub struct CosineScorer<'a> {
    features: &'a FeatureMatrix,
}

impl<'a> CosineScorer<'a> {
    pub fn new(features: &'a FeatureMatrix) -> CosineScorer<'a> {
        CosineScorer { features }
    }
}

impl EdgeScorer for CosineScorer<'_> {
    fn score(&self, src: usize, dst: usize) -> Result<f64, GraphError> {
        let cos = cosine_similarity(self.features.row(src), self.features.row(dst))?;
        Ok(((1.0 + cos) / 2.0).clamp(0.0, 1.0))
    }
}

#[derive(Serialize, Deserialize)]
struct RawScore {
    src: String,
    dst: String,
    score: f64,
}

/// Pair scores generated offline, keyed by directional id pairs. A lookup
/// for (u, v) falls back to (v, u) when only one direction is present.
#[derive(Debug, Clone)]
pub struct PrecomputedScorer {
    ids: Vec<String>,
    scores: HashMap<(usize, usize), f64>,
}

impl PrecomputedScorer {
    /// Load a JSONL score file (`{"src": id, "dst": id, "score": x}` per
    /// line). Entries whose ids are not in `row_ids` are ignored; later
    /// entries overwrite earlier ones for the same directed pair.
    pub fn load(path: impl AsRef<Path>, row_ids: &[String]) -> Result<PrecomputedScorer, GraphError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawScore = serde_json::from_str(line).map_err(|source| {
                GraphError::MalformedLine {
                    line: idx + 1,
                    source,
                }
            })?;
            entries.push((raw.src, raw.dst, raw.score));
        }
        PrecomputedScorer::from_entries(row_ids, entries)
    }

    pub fn from_entries(
        row_ids: &[String],
        entries: impl IntoIterator<Item = (String, String, f64)>,
    ) -> Result<PrecomputedScorer, GraphError> {
        let index: HashMap<&str, usize> = row_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut scores = HashMap::new();
        for (src, dst, score) in entries {
            let (Some(&u), Some(&v)) = (index.get(src.as_str()), index.get(dst.as_str())) else {
                continue;
            };
            if !(-1e-6..=1.0 + 1e-6).contains(&score) {
                return Err(GraphError::ScoreOutOfRange { src, dst, score });
            }
            scores.insert((u, v), score.clamp(0.0, 1.0));
        }
        Ok(PrecomputedScorer {
            ids: row_ids.to_vec(),
            scores,
        })
    }
}

impl EdgeScorer for PrecomputedScorer {
    fn score(&self, src: usize, dst: usize) -> Result<f64, GraphError> {
        self.scores
            .get(&(src, dst))
            .or_else(|| self.scores.get(&(dst, src)))
            .copied()
            .ok_or_else(|| GraphError::MissingPairScore {
                src: self.ids[src].clone(),
                dst: self.ids[dst].clone(),
            })
    }
}

/// Score every unordered pair appearing in the neighbor lists. The weight
/// of a pair is the mean of its two directional scores.
pub fn score_pairs(
    neighbors: &NeighborLists,
    scorer: &dyn EdgeScorer,
) -> Result<Vec<EdgeScore>, GraphError> {
    let mut pairs = BTreeSet::new();
    for (v, list) in neighbors.iter().enumerate() {
        for nb in list {
            pairs.insert((v.min(nb.index), v.max(nb.index)));
        }
    }
    let pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
    pairs
        .par_iter()
        .map(|&(u, v)| {
            let forward = scorer.score(u, v)?;
            let backward = scorer.score(v, u)?;
            Ok(EdgeScore {
                src: u,
                dst: v,
                score: (0.5 * (forward + backward)).clamp(0.0, 1.0),
            })
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n_nodes: usize,
    ids: Vec<String>,
    edges: Vec<(usize, usize, f64)>,
}

/// Weighted undirected homogeneous graph over persona statements.
/// Each unordered pair is stored once as `(u, v, w)` with `u < v`; the
/// adjacency lists mirror the edge list in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonaGraph {
    n_nodes: usize,
    ids: Vec<String>,
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PersonaGraph {
    /// Build from an edge list, validating all graph invariants. Edges are
    /// sorted into canonical `(u, v)` order.
    pub fn new(ids: Vec<String>, mut edges: Vec<(usize, usize, f64)>) -> Result<PersonaGraph, GraphError> {
        let n_nodes = ids.len();
        for &(u, v, w) in &edges {
            if u == v {
                return Err(GraphError::InvalidGraph(format!("self-loop at node {u}")));
            }
            if u > v {
                return Err(GraphError::InvalidGraph(format!(
                    "edge ({u}, {v}) not in canonical u < v order"
                )));
            }
            if v >= n_nodes {
                return Err(GraphError::InvalidGraph(format!(
                    "edge ({u}, {v}) references a node >= {n_nodes}"
                )));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(GraphError::InvalidGraph(format!(
                    "edge ({u}, {v}) weight {w} outside [0, 1]"
                )));
            }
        }
        edges.sort_unstable_by_key(|&(u, v, _)| (u, v));
        for pair in edges.windows(2) {
            if (pair[0].0, pair[0].1) == (pair[1].0, pair[1].1) {
                return Err(GraphError::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    pair[0].0, pair[0].1
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); n_nodes];
        for &(u, v, w) in &edges {
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        Ok(PersonaGraph {
            n_nodes,
            ids,
            edges,
            adjacency,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    /// Sum of incident edge weights per node.
    pub fn weight_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_nodes];
        for &(u, v, w) in &self.edges {
            sums[u] += w;
            sums[v] += w;
        }
        sums
    }

    /// Copy of the graph keeping only edges whose two endpoints satisfy
    /// `keep`. Node indices and ids are unchanged.
    pub fn filter_nodes(&self, keep: impl Fn(usize) -> bool) -> PersonaGraph {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&(u, v, _)| keep(u) && keep(v))
            .collect();
        PersonaGraph::new(self.ids.clone(), edges).expect("filtered edges stay valid")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let path = path.as_ref();
        let file = GraphFile {
            n_nodes: self.n_nodes,
            ids: self.ids.clone(),
            edges: self.edges.clone(),
        };
        let json = serde_json::to_string_pretty(&file).expect("graph serializes");
        fs::write(path, json + "\n").map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PersonaGraph, GraphError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: GraphFile =
            serde_json::from_str(&text).map_err(|source| GraphError::MalformedLine {
                line: source.line(),
                source,
            })?;
        if file.ids.len() != file.n_nodes {
            return Err(GraphError::InvalidGraph(format!(
                "n_nodes = {} but {} ids",
                file.n_nodes,
                file.ids.len()
            )));
        }
        PersonaGraph::new(file.ids, file.edges)
    }
}

/// Full pipeline: k-NN neighbor identification, pair scoring, assembly.
pub fn build_graph(
    features: &FeatureMatrix,
    k: usize,
    scorer: &dyn EdgeScorer,
) -> Result<PersonaGraph, GraphError> {
    let neighbors = knn_neighbors(features, k)?;
    let scores = score_pairs(&neighbors, scorer)?;
    let edges = scores.into_iter().map(|e| (e.src, e.dst, e.score)).collect();
    PersonaGraph::new(features.row_ids.clone(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(values: Array2<f64>) -> FeatureMatrix {
        let ids = (0..values.nrows()).map(|i| format!("n{i}")).collect();
        FeatureMatrix::new(ids, values).unwrap()
    }

    fn random_matrix(n: usize, dim: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        matrix(Array2::from_shape_fn((n, dim), |_| {
            rng.random_range(-1.0..1.0)
        }))
    }

    /// Exhaustive O(n^2) reference: cosine for every pair, full sort.
    fn knn_oracle(features: &FeatureMatrix, k: usize) -> NeighborLists {
        let n = features.n_rows();
        (0..n)
            .map(|v| {
                let mut all: Vec<Neighbor> = (0..n)
                    .filter(|&u| u != v)
                    .map(|u| Neighbor {
                        index: u,
                        similarity: cosine_similarity(features.row(v), features.row(u)).unwrap(),
                    })
                    .collect();
                all.sort_by(|a, b| {
                    b.similarity
                        .partial_cmp(&a.similarity)
                        .unwrap()
                        .then(a.index.cmp(&b.index))
                });
                all.truncate(k);
                all
            })
            .collect()
    }

    #[test]
    #[allow(clippy::approx_constant)] // 0.7071 is the hand-computed 1/sqrt(2)
    fn cosine_basic_values() {
        let a = array![1.0, 0.0];
        let b = array![0.0, 1.0];
        let c = array![1.0, 1.0];
        assert_eq!(cosine_similarity(a.view(), a.view()).unwrap(), 1.0);
        assert_eq!(cosine_similarity(a.view(), b.view()).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cosine_similarity(c.view(), a.view()).unwrap(),
            0.7071,
            epsilon = 1e-4
        );
    }

    #[test]
    fn cosine_zero_vector_is_zero_and_dims_must_match() {
        let zero = array![0.0, 0.0];
        let a = array![1.0, 2.0];
        assert_eq!(cosine_similarity(zero.view(), a.view()).unwrap(), 0.0);
        let short = array![1.0];
        assert!(matches!(
            cosine_similarity(short.view(), a.view()),
            Err(GraphError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn knn_ties_break_by_ascending_index() {
        // Three one-hot nodes: all similarities are 0, so each node picks
        // the lowest-index other node.
        let m = matrix(array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let lists = knn_neighbors(&m, 1).unwrap();
        assert_eq!(lists[0][0].index, 1);
        assert_eq!(lists[1][0].index, 0);
        assert_eq!(lists[2][0].index, 0);
    }

    #[test]
    fn duplicated_vectors_select_each_other() {
        let m = matrix(array![[0.4, 0.6], [0.4, 0.6], [-1.0, 0.2]]);
        let lists = knn_neighbors(&m, 1).unwrap();
        assert_eq!(lists[0][0].index, 1);
        assert_eq!(lists[1][0].index, 0);
        assert_abs_diff_eq!(lists[0][0].similarity, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn knn_matches_exhaustive_oracle() {
        let m = random_matrix(200, 16, 41);
        let lists = knn_neighbors(&m, 7).unwrap();
        let oracle = knn_oracle(&m, 7);
        assert_eq!(lists, oracle);
    }

    #[test]
    fn knn_rejects_out_of_range_k() {
        let m = random_matrix(5, 3, 0);
        assert!(matches!(
            knn_neighbors(&m, 0),
            Err(GraphError::KOutOfRange { .. })
        ));
        assert!(matches!(
            knn_neighbors(&m, 5),
            Err(GraphError::KOutOfRange { .. })
        ));
    }

    #[test]
    fn precomputed_scores_symmetrize_by_mean() {
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        let scorer = PrecomputedScorer::from_entries(
            &ids,
            vec![
                ("a".to_string(), "b".to_string(), 0.9),
                ("b".to_string(), "a".to_string(), 0.7),
            ],
        )
        .unwrap();
        let neighbors = vec![
            vec![Neighbor {
                index: 1,
                similarity: 1.0,
            }],
            vec![Neighbor {
                index: 0,
                similarity: 1.0,
            }],
        ];
        let scores = score_pairs(&neighbors, &scorer).unwrap();
        assert_eq!(scores.len(), 1);
        assert_abs_diff_eq!(scores[0].score, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn precomputed_single_direction_is_used_for_both() {
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        let scorer = PrecomputedScorer::from_entries(
            &ids,
            vec![("a".to_string(), "b".to_string(), 0.6)],
        )
        .unwrap();
        assert_abs_diff_eq!(scorer.score(1, 0).unwrap(), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn missing_pair_error_names_the_pair() {
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        let scorer = PrecomputedScorer::from_entries(&ids, vec![]).unwrap();
        let err = scorer.score(0, 1).unwrap_err();
        assert_eq!(err.to_string(), "missing score for pair (a, b)");
    }

    #[test]
    fn out_of_range_scores_are_rejected_after_tolerance() {
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        let err = PrecomputedScorer::from_entries(
            &ids,
            vec![("a".to_string(), "b".to_string(), 1.5)],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::ScoreOutOfRange { .. }));
        // Values inside the 1e-6 tolerance are clamped.
        let ok = PrecomputedScorer::from_entries(
            &ids,
            vec![("a".to_string(), "b".to_string(), 1.0 + 5e-7)],
        )
        .unwrap();
        assert_eq!(ok.score(0, 1).unwrap(), 1.0);
    }

    #[test]
    fn identical_pair_has_cosine_score_one() {
        let m = matrix(array![[0.6, 0.8], [0.6, 0.8]]);
        let g = build_graph(&m, 1, &CosineScorer::new(&m)).unwrap();
        assert_eq!(g.n_edges(), 1);
        let (u, v, w) = g.edges()[0];
        assert_eq!((u, v), (0, 1));
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn well_separated_clusters_have_no_cross_edges() {
        // Two clusters of 5 around +10*e1 and -10*e1, jitter well below the
        // separation. Verified against an exhaustive distance check.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rows = Vec::new();
        for cluster in 0..2 {
            let center = if cluster == 0 { 10.0 } else { -10.0 };
            for _ in 0..5 {
                rows.push([center + rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]);
            }
        }
        let values = Array2::from_shape_fn((10, 2), |(i, j)| rows[i][j]);
        let m = matrix(values.clone());
        let g = build_graph(&m, 2, &CosineScorer::new(&m)).unwrap();
        for &(u, v, _) in g.edges() {
            assert_eq!(u / 5, v / 5, "cross-cluster edge ({u}, {v})");
        }
        // Exhaustive check that within-cluster similarity really dominates.
        for u in 0..10 {
            for v in 0..10 {
                if u != v && u / 5 == v / 5 {
                    let same = cosine_similarity(m.row(u), m.row(v)).unwrap();
                    let other = 5 * (1 - u / 5);
                    for w in other..other + 5 {
                        let cross = cosine_similarity(m.row(u), m.row(w)).unwrap();
                        assert!(same > cross);
                    }
                }
            }
        }
    }

    #[test]
    fn edge_count_is_bounded_by_symmetrization() {
        let m = random_matrix(500, 8, 3);
        let k = 7;
        let g = build_graph(&m, k, &CosineScorer::new(&m)).unwrap();
        let n = m.n_rows();
        assert!(g.n_edges() <= n * k);
        assert!(g.n_edges() >= n * k / 2);
    }

    #[test]
    fn graph_roundtrips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.json");
        let m = random_matrix(30, 4, 11);
        let g = build_graph(&m, 3, &CosineScorer::new(&m)).unwrap();
        g.save(&path).unwrap();
        let loaded = PersonaGraph::load(&path).unwrap();
        assert_eq!(g, loaded);
    }

    #[test]
    fn load_rejects_duplicate_edges_and_self_loops() {
        let dir = tempfile::tempdir().unwrap();
        let dup = dir.path().join("dup.json");
        std::fs::write(
            &dup,
            r#"{"n_nodes":3,"ids":["a","b","c"],"edges":[[0,1,0.5],[0,1,0.6]]}"#,
        )
        .unwrap();
        assert!(matches!(
            PersonaGraph::load(&dup),
            Err(GraphError::InvalidGraph(_))
        ));

        let self_loop = dir.path().join("loop.json");
        std::fs::write(
            &self_loop,
            r#"{"n_nodes":3,"ids":["a","b","c"],"edges":[[1,1,0.5]]}"#,
        )
        .unwrap();
        assert!(matches!(
            PersonaGraph::load(&self_loop),
            Err(GraphError::InvalidGraph(_))
        ));
    }

    #[test]
    fn build_graph_is_deterministic() {
        let m = random_matrix(60, 6, 5);
        let a = build_graph(&m, 4, &CosineScorer::new(&m)).unwrap();
        let b = build_graph(&m, 4, &CosineScorer::new(&m)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn prop_graph_invariants(n in 3usize..40, k in 1usize..6, seed in 0u64..500) {
            let k = k.min(n - 1);
            let m = random_matrix(n, 5, seed);
            let g = build_graph(&m, k, &CosineScorer::new(&m)).unwrap();
            // weights in range, canonical order, adjacency symmetric
            let mut prev: Option<(usize, usize)> = None;
            for &(u, v, w) in g.edges() {
                prop_assert!(u < v);
                prop_assert!((0.0..=1.0).contains(&w));
                if let Some(p) = prev {
                    prop_assert!(p < (u, v));
                }
                prev = Some((u, v));
                prop_assert!(g.neighbors(u).contains(&(v, w)));
                prop_assert!(g.neighbors(v).contains(&(u, w)));
            }
            prop_assert!(g.n_edges() <= n * k);
            prop_assert!(g.n_edges() >= n * k / 2);
            // degree >= 1 for every node (each node proposed k neighbors)
            for node in 0..n {
                prop_assert!(!g.neighbors(node).is_empty());
            }
            // impl matches the exhaustive oracle
            prop_assert_eq!(knn_neighbors(&m, k).unwrap(), knn_oracle(&m, k));
        }
    }
}
