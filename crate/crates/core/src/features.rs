//! Per-statement feature vectors: bag-of-words, TF-IDF, and ingestion of
//! precomputed embeddings.
//!
//! Embedding files come in two interchangeable formats, detected by magic:
//!
//! * format A — JSONL, one `{"id": str, "vector": [float, ...]}` per line;
//! * format B — binary: 16-byte header (`PGEMB1\0\0`, u32-le row count,
//!   u32-le dimension), `rows * dim` little-endian f32 values in row-major
//!   order, then the row ids as newline-separated UTF-8.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Dataset;

/// Magic prefix of binary embedding files (format B).
pub const EMBEDDING_MAGIC: &[u8; 8] = b"PGEMB1\0\0";

#[derive(Debug, Error)]
pub enum FeatureError {
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
    #[error("min_df must be >= 1")]
    InvalidMinDf,
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("no embedding vector for id {0:?}")]
    MissingId(String),
    #[error("duplicate embedding vector for id {0:?}")]
    DuplicateId(String),
    #[error("vector for {id:?} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in vector for id {0:?}")]
    NonFinite(String),
    #[error("row_ids length {ids} does not match row count {rows}")]
    RowIdMismatch { ids: usize, rows: usize },
    #[error("non-finite entry at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("malformed binary embedding file: {0}")]
    MalformedBinary(String),
    #[error("id {0:?} contains a newline; not representable in the binary format")]
    IdWithNewline(String),
}

/// Token-to-column mapping with per-token document frequencies.
/// Columns are assigned by lexicographic token order, so a vocabulary is
/// fully determined by its corpus and `min_df`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, column: usize) -> &str {
        &self.tokens[column]
    }

    pub fn doc_freq(&self, column: usize) -> usize {
        self.doc_freq[column]
    }

    /// Smoothed inverse document frequency: `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, column: usize) -> f64 {
        ((1 + self.n_docs) as f64 / (1 + self.doc_freq[column]) as f64).ln() + 1.0
    }
}

/// Lowercase, split on non-alphanumeric runs, drop empty tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Collect every token with document frequency >= `min_df`.
pub fn fit_vocabulary(ds: &Dataset, min_df: usize) -> Result<Vocabulary, FeatureError> {
    if min_df < 1 {
        return Err(FeatureError::InvalidMinDf);
    }
    if ds.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for record in &ds.records {
        let unique: HashSet<String> = tokenize(&record.text).into_iter().collect();
        for token in unique {
            *df.entry(token).or_insert(0) += 1;
        }
    }
    let mut tokens: Vec<String> = df
        .iter()
        .filter(|(_, &count)| count >= min_df)
        .map(|(token, _)| token.clone())
        .collect();
    tokens.sort_unstable();
    let doc_freq = tokens.iter().map(|t| df[t]).collect();
    let index = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(Vocabulary {
        tokens,
        index,
        doc_freq,
        n_docs: ds.len(),
    })
}

/// Dense row-per-statement feature matrix; `row_ids` align rows with
/// dataset records. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub row_ids: Vec<String>,
    pub values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(row_ids: Vec<String>, values: Array2<f64>) -> Result<FeatureMatrix, FeatureError> {
        if row_ids.len() != values.nrows() {
            return Err(FeatureError::RowIdMismatch {
                ids: row_ids.len(),
                rows: values.nrows(),
            });
        }
        for ((row, col), &v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(FeatureError::NonFiniteEntry { row, col });
            }
        }
        Ok(FeatureMatrix { row_ids, values })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }
}

/// Raw token counts per statement; out-of-vocabulary tokens are ignored.
pub fn bow_transform(ds: &Dataset, vocab: &Vocabulary) -> FeatureMatrix {
    let mut values = Array2::zeros((ds.len(), vocab.len()));
    for (i, record) in ds.records.iter().enumerate() {
        for token in tokenize(&record.text) {
            if let Some(j) = vocab.index_of(&token) {
                values[[i, j]] += 1.0;
            }
        }
    }
    FeatureMatrix {
        row_ids: ds.ids(),
        values,
    }
}

/// Term frequency times smoothed idf, with every nonzero row L2-normalized.
pub fn tfidf_transform(ds: &Dataset, vocab: &Vocabulary) -> FeatureMatrix {
    let mut m = bow_transform(ds, vocab);
    for j in 0..vocab.len() {
        let idf = vocab.idf(j);
        m.values.column_mut(j).mapv_inplace(|tf| tf * idf);
    }
    normalize_rows(&mut m.values);
    m
}

/// Scale every nonzero row to unit L2 norm; zero rows are left unchanged.
pub fn l2_normalize(m: &FeatureMatrix) -> FeatureMatrix {
    let mut out = m.clone();
    normalize_rows(&mut out.values);
    out
}

fn normalize_rows(values: &mut Array2<f64>) {
    for mut row in values.rows_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawEmbedding {
    id: String,
    vector: Vec<f64>,
}

/// Load an embedding file (format A or B, detected by magic) and align its
/// rows to the dataset order by id. Ids present in the file but absent from
/// the dataset are ignored.
pub fn load_embeddings(path: impl AsRef<Path>, ds: &Dataset) -> Result<FeatureMatrix, FeatureError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| FeatureError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let by_id = if bytes.starts_with(EMBEDDING_MAGIC) {
        parse_binary(&bytes)?
    } else {
        parse_jsonl(&bytes)?
    };
    align(by_id, ds)
}

fn parse_jsonl(bytes: &[u8]) -> Result<HashMap<String, Vec<f64>>, FeatureError> {
    let text = String::from_utf8_lossy(bytes);
    let mut by_id = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEmbedding = serde_json::from_str(line).map_err(|source| {
            FeatureError::MalformedLine {
                line: idx + 1,
                source,
            }
        })?;
        if by_id.insert(raw.id.clone(), raw.vector).is_some() {
            return Err(FeatureError::DuplicateId(raw.id));
        }
    }
    Ok(by_id)
}

fn parse_binary(bytes: &[u8]) -> Result<HashMap<String, Vec<f64>>, FeatureError> {
    let malformed = |msg: &str| FeatureError::MalformedBinary(msg.to_string());
    if bytes.len() < 16 {
        return Err(malformed("file shorter than the 16-byte header"));
    }
    let n_rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let data_len = n_rows
        .checked_mul(dim)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| malformed("row count times dimension overflows"))?;
    let data_end = 16 + data_len;
    if bytes.len() < data_end {
        return Err(malformed("file truncated inside the float32 block"));
    }
    let ids_blob = std::str::from_utf8(&bytes[data_end..])
        .map_err(|_| malformed("id block is not valid UTF-8"))?;
    let ids: Vec<&str> = if n_rows == 0 {
        Vec::new()
    } else {
        ids_blob.split('\n').collect()
    };
    if ids.len() != n_rows {
        return Err(malformed(&format!(
            "expected {n_rows} newline-separated ids, found {}",
            ids.len()
        )));
    }
    let mut by_id = HashMap::new();
    for (row, id) in ids.iter().enumerate() {
        let start = 16 + row * dim * 4;
        let vector: Vec<f64> = (0..dim)
            .map(|j| {
                let off = start + j * 4;
                f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64
            })
            .collect();
        if by_id.insert(id.to_string(), vector).is_some() {
            return Err(FeatureError::DuplicateId(id.to_string()));
        }
    }
    Ok(by_id)
}

fn align(by_id: HashMap<String, Vec<f64>>, ds: &Dataset) -> Result<FeatureMatrix, FeatureError> {
    let dim = match ds.records.first() {
        Some(first) => by_id
            .get(&first.id)
            .ok_or_else(|| FeatureError::MissingId(first.id.clone()))?
            .len(),
        None => 0,
    };
    let mut values = Array2::zeros((ds.len(), dim));
    for (i, record) in ds.records.iter().enumerate() {
        let vector = by_id
            .get(&record.id)
            .ok_or_else(|| FeatureError::MissingId(record.id.clone()))?;
        if vector.len() != dim {
            return Err(FeatureError::DimensionMismatch {
                id: record.id.clone(),
                expected: dim,
                found: vector.len(),
            });
        }
        for (j, &v) in vector.iter().enumerate() {
            if !v.is_finite() {
                return Err(FeatureError::NonFinite(record.id.clone()));
            }
            values[[i, j]] = v;
        }
    }
    Ok(FeatureMatrix {
        row_ids: ds.ids(),
        values,
    })
}

/// Write an embedding file in format A (JSONL).
pub fn save_embeddings_jsonl(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<(), FeatureError> {
    let path = path.as_ref();
    let mut out = String::new();
    for (id, row) in m.row_ids.iter().zip(m.values.rows()) {
        let raw = RawEmbedding {
            id: id.clone(),
            vector: row.to_vec(),
        };
        out.push_str(&serde_json::to_string(&raw).expect("embedding serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| FeatureError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Write an embedding file in format B (binary, float32).
pub fn save_embeddings_binary(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<(), FeatureError> {
    let path = path.as_ref();
    for id in &m.row_ids {
        if id.contains('\n') {
            return Err(FeatureError::IdWithNewline(id.clone()));
        }
    }
    let mut bytes = Vec::with_capacity(16 + m.n_rows() * m.dim() * 4);
    bytes.extend_from_slice(EMBEDDING_MAGIC);
    bytes.extend_from_slice(&(m.n_rows() as u32).to_le_bytes());
    bytes.extend_from_slice(&(m.dim() as u32).to_le_bytes());
    for row in m.values.rows() {
        for &v in row {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    bytes.extend_from_slice(m.row_ids.join("\n").as_bytes());
    fs::write(path, bytes).map_err(|source| FeatureError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, LabelSet, PersonaRecord, SplitTag};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dataset_from_texts(texts: &[&str]) -> Dataset {
        let records = texts
            .iter()
            .enumerate()
            .map(|(i, text)| PersonaRecord {
                id: format!("d{i}"),
                text: text.to_string(),
                labels: LabelSet::single(Label::Experiences),
            })
            .collect();
        Dataset::new(records, SplitTag::Train)
    }

    #[test]
    fn tokenize_lowercases_and_splits() {
        assert_eq!(tokenize("I love swimming."), vec!["i", "love", "swimming"]);
        assert_eq!(
            tokenize("I don't like ice cream"),
            vec!["i", "don", "t", "like", "ice", "cream"]
        );
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn vocabulary_counts_document_frequencies() {
        let ds = dataset_from_texts(&["a b", "b c"]);
        let vocab = fit_vocabulary(&ds, 1).unwrap();
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.index_of("a"), Some(0));
        assert_eq!(vocab.index_of("b"), Some(1));
        assert_eq!(vocab.index_of("c"), Some(2));
        assert_eq!(vocab.doc_freq(vocab.index_of("b").unwrap()), 2);

        let strict = fit_vocabulary(&ds, 2).unwrap();
        assert_eq!(strict.len(), 1);
        assert_eq!(strict.index_of("b"), Some(0));
    }

    #[test]
    fn vocabulary_rejects_empty_corpus_and_zero_min_df() {
        let empty = Dataset::new(vec![], SplitTag::Train);
        assert!(matches!(
            fit_vocabulary(&empty, 1),
            Err(FeatureError::EmptyCorpus)
        ));
        let ds = dataset_from_texts(&["a"]);
        assert!(matches!(
            fit_vocabulary(&ds, 0),
            Err(FeatureError::InvalidMinDf)
        ));
    }

    #[test]
    fn bow_counts_tokens_and_ignores_oov() {
        let ds = dataset_from_texts(&["a b", "b c"]);
        let vocab = fit_vocabulary(&ds, 1).unwrap();
        let m = bow_transform(&ds, &vocab);
        assert_eq!(m.values.row(0).to_vec(), vec![1.0, 1.0, 0.0]);
        assert_eq!(m.values.row(1).to_vec(), vec![0.0, 1.0, 1.0]);

        let extra = dataset_from_texts(&["b b c", "zzz qqq"]);
        let m2 = bow_transform(&extra, &vocab);
        assert_eq!(m2.values.row(0).to_vec(), vec![0.0, 2.0, 1.0]);
        assert_eq!(m2.values.row(1).to_vec(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn tfidf_matches_hand_computed_idf() {
        let ds = dataset_from_texts(&["a b", "b c"]);
        let vocab = fit_vocabulary(&ds, 1).unwrap();
        let b = vocab.index_of("b").unwrap();
        let a = vocab.index_of("a").unwrap();
        assert_abs_diff_eq!(vocab.idf(b), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vocab.idf(a), (1.5f64).ln() + 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vocab.idf(a), 1.405465, epsilon = 1e-6);

        let m = tfidf_transform(&ds, &vocab);
        for row in m.values.rows() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-6);
        }
        // Relative magnitudes inside row 0: idf(a) > idf(b) at equal tf.
        assert!(m.values[[0, a]] > m.values[[0, b]]);
    }

    #[test]
    fn tfidf_leaves_zero_rows_zero() {
        let ds = dataset_from_texts(&["a b", "b c"]);
        let vocab = fit_vocabulary(&ds, 1).unwrap();
        let oov = dataset_from_texts(&["zzz"]);
        let m = tfidf_transform(&oov, &vocab);
        assert!(m.values.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn l2_normalize_scales_rows() {
        let m = FeatureMatrix::new(
            vec!["x".into(), "y".into()],
            ndarray::array![[3.0, 4.0], [0.0, 0.0]],
        )
        .unwrap();
        let n = l2_normalize(&m);
        assert_abs_diff_eq!(n.values[[0, 0]], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(n.values[[0, 1]], 0.8, epsilon = 1e-12);
        assert_eq!(n.values.row(1).to_vec(), vec![0.0, 0.0]);
        let again = l2_normalize(&n);
        for (u, v) in n.values.iter().zip(again.values.iter()) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn feature_matrix_rejects_non_finite_values() {
        let err = FeatureMatrix::new(vec!["x".into()], ndarray::array![[f64::NAN]]).unwrap_err();
        assert!(matches!(err, FeatureError::NonFiniteEntry { row: 0, col: 0 }));
    }

    fn two_id_dataset() -> Dataset {
        let records = vec![
            PersonaRecord {
                id: "p2".into(),
                text: "second".into(),
                labels: LabelSet::single(Label::Experiences),
            },
            PersonaRecord {
                id: "p1".into(),
                text: "first".into(),
                labels: LabelSet::single(Label::Experiences),
            },
        ];
        Dataset::new(records, SplitTag::Train)
    }

    #[test]
    fn embeddings_align_to_dataset_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        std::fs::write(
            &path,
            concat!(
                r#"{"id":"p1","vector":[1.0,0.0]}"#,
                "\n",
                r#"{"id":"p2","vector":[0.0,2.0]}"#,
                "\n"
            ),
        )
        .unwrap();
        let m = load_embeddings(&path, &two_id_dataset()).unwrap();
        assert_eq!(m.row_ids, vec!["p2".to_string(), "p1".to_string()]);
        assert_eq!(m.values.row(0).to_vec(), vec![0.0, 2.0]);
        assert_eq!(m.values.row(1).to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn embeddings_missing_id_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        std::fs::write(&path, "{\"id\":\"p1\",\"vector\":[1.0]}\n").unwrap();
        let err = load_embeddings(&path, &two_id_dataset()).unwrap_err();
        match err {
            FeatureError::MissingId(id) => assert_eq!(id, "p2"),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn embeddings_reject_nan_and_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        // JSON has no NaN literal, so the non-finite check is exercised
        // through the binary format.
        let nan = dir.path().join("nan.bin");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(EMBEDDING_MAGIC);
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(b"p2\np1");
        std::fs::write(&nan, bytes).unwrap();
        let err = load_embeddings(&nan, &two_id_dataset()).unwrap_err();
        match err {
            FeatureError::NonFinite(id) => assert_eq!(id, "p2"),
            other => panic!("unexpected error: {other:?}"),
        }

        let mismatch = dir.path().join("dim.jsonl");
        std::fs::write(
            &mismatch,
            concat!(
                r#"{"id":"p2","vector":[0.0,1.0]}"#,
                "\n",
                r#"{"id":"p1","vector":[1.0]}"#,
                "\n"
            ),
        )
        .unwrap();
        let err = load_embeddings(&mismatch, &two_id_dataset()).unwrap_err();
        assert!(matches!(err, FeatureError::DimensionMismatch { .. }));
    }

    #[test]
    fn binary_format_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.bin");
        let ds = two_id_dataset();
        let m = FeatureMatrix::new(
            ds.ids(),
            ndarray::array![[0.5, -1.25, 3.0], [2.0, 0.0, -0.5]],
        )
        .unwrap();
        save_embeddings_binary(&m, &path).unwrap();
        let loaded = load_embeddings(&path, &ds).unwrap();
        assert_eq!(loaded, m);
    }

    #[test]
    fn binary_format_rejects_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.bin");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(EMBEDDING_MAGIC);
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[0u8; 8]); // far fewer than 2*3*4 bytes
        std::fs::write(&path, bytes).unwrap();
        let err = load_embeddings(&path, &two_id_dataset()).unwrap_err();
        assert!(matches!(err, FeatureError::MalformedBinary(_)));
    }

    proptest! {
        #[test]
        fn prop_tfidf_rows_are_unit_or_zero(texts in proptest::collection::vec("[a-d ]{0,12}", 1..20)) {
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let ds = dataset_from_texts(&refs);
            if let Ok(vocab) = fit_vocabulary(&ds, 1) {
                let m = tfidf_transform(&ds, &vocab);
                for row in m.values.rows() {
                    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-6);
                }
            }
        }

        #[test]
        fn prop_bow_entries_are_nonnegative_integers(texts in proptest::collection::vec("[a-c ]{0,10}", 1..15)) {
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let ds = dataset_from_texts(&refs);
            if let Ok(vocab) = fit_vocabulary(&ds, 1) {
                let m = bow_transform(&ds, &vocab);
                for &v in m.values.iter() {
                    prop_assert!(v >= 0.0 && v.fract() == 0.0);
                }
            }
        }
    }

    #[test]
    fn permuting_dataset_rows_permutes_embedding_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let ds = two_id_dataset();
        let m = FeatureMatrix::new(ds.ids(), ndarray::array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        save_embeddings_jsonl(&m, &path).unwrap();

        let mut flipped = ds.clone();
        flipped.records.reverse();
        let a = load_embeddings(&path, &ds).unwrap();
        let b = load_embeddings(&path, &flipped).unwrap();
        assert_eq!(a.values.row(0).to_vec(), b.values.row(1).to_vec());
        assert_eq!(a.values.row(1).to_vec(), b.values.row(0).to_vec());
    }
}
