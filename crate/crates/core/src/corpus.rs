//! The labeled persona corpus: loading, validation, statistics, and
//! seeded subsampling.
//!
//! Corpus files are UTF-8 JSONL, one object per line:
//! `{"id": "p1", "text": "I am afraid of snakes.", "labels": ["Characteristics"]}`.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
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
    #[error("line {line}: unknown label {name:?}")]
    UnknownLabel { line: usize, name: String },
    #[error("line {line}: empty label set for record {id:?}")]
    EmptyLabels { line: usize, id: String },
    #[error("line {line}: empty text for record {id:?}")]
    EmptyText { line: usize, id: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("fraction {0} out of range: must be in (0, 1]")]
    FractionOutOfRange(f64),
    #[error("cannot subsample an empty dataset")]
    EmptyDataset,
}

/// The five persona classes. The declaration order is canonical and fixes
/// the column layout of every label matrix and vector in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Experiences,
    Characteristics,
    RoutinesOrHabits,
    GoalsOrPlans,
    Relationship,
}

impl Label {
    pub const COUNT: usize = 5;

    /// All labels in canonical order.
    pub const ALL: [Label; Label::COUNT] = [
        Label::Experiences,
        Label::Characteristics,
        Label::RoutinesOrHabits,
        Label::GoalsOrPlans,
        Label::Relationship,
    ];

    /// Column index under the canonical ordering.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Label::ALL.get(index).copied()
    }

    /// Canonical name as written in corpus files.
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Experiences => "Experiences",
            Label::Characteristics => "Characteristics",
            Label::RoutinesOrHabits => "Routines or Habits",
            Label::GoalsOrPlans => "Goals or Plans",
            Label::Relationship => "Relationship",
        }
    }

    pub fn parse(name: &str) -> Option<Label> {
        Label::ALL.iter().copied().find(|l| l.as_str() == name)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Set of labels carried by one record, stored as a 5-bit mask.
/// Iteration is always in canonical label order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LabelSet(u8);

impl LabelSet {
    const MASK: u8 = (1 << Label::COUNT as u8) - 1;

    pub fn empty() -> LabelSet {
        LabelSet(0)
    }

    pub fn single(label: Label) -> LabelSet {
        LabelSet(1 << label.index())
    }

    /// Build from a raw bit mask; bits above the label count are dropped.
    pub fn from_bits(bits: u8) -> LabelSet {
        LabelSet(bits & Self::MASK)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn insert(&mut self, label: Label) {
        self.0 |= 1 << label.index();
    }

    pub fn contains(self, label: Label) -> bool {
        self.0 & (1 << label.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Label> {
        Label::ALL.into_iter().filter(move |l| self.contains(*l))
    }
}

impl FromIterator<Label> for LabelSet {
    fn from_iter<T: IntoIterator<Item = Label>>(iter: T) -> LabelSet {
        let mut set = LabelSet::empty();
        for label in iter {
            set.insert(label);
        }
        set
    }
}

/// One persona statement with its (non-empty) label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonaRecord {
    pub id: String,
    pub text: String,
    pub labels: LabelSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
}

/// Ordered collection of records with unique ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub records: Vec<PersonaRecord>,
    pub split_tag: SplitTag,
}

/// Per-label record counts. `overall` is the number of records, not the
/// sum of label counts (records are multi-label).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelStats {
    pub counts: [usize; Label::COUNT],
    pub overall: usize,
}

impl LabelStats {
    pub fn count(&self, label: Label) -> usize {
        self.counts[label.index()]
    }
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    id: String,
    text: String,
    labels: Vec<String>,
}

impl Dataset {
    pub fn new(records: Vec<PersonaRecord>, split_tag: SplitTag) -> Dataset {
        Dataset { records, split_tag }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.id.clone()).collect()
    }

    /// Load a JSONL corpus, preserving file order. Blank lines are skipped;
    /// every error is reported with its 1-based line number.
    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Dataset, CorpusError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Dataset::from_reader(BufReader::new(file), path)
    }

    fn from_reader(reader: impl BufRead, path: &Path) -> Result<Dataset, CorpusError> {
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| CorpusError::Io {
                path: path.display().to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawRecord = serde_json::from_str(&line)
                .map_err(|source| CorpusError::MalformedLine { line: line_no, source })?;
            if raw.labels.is_empty() {
                return Err(CorpusError::EmptyLabels { line: line_no, id: raw.id });
            }
            if raw.text.is_empty() {
                return Err(CorpusError::EmptyText { line: line_no, id: raw.id });
            }
            let mut labels = LabelSet::empty();
            for name in &raw.labels {
                let label = Label::parse(name).ok_or_else(|| CorpusError::UnknownLabel {
                    line: line_no,
                    name: name.clone(),
                })?;
                labels.insert(label);
            }
            if !seen.insert(raw.id.clone()) {
                return Err(CorpusError::DuplicateId { line: line_no, id: raw.id });
            }
            records.push(PersonaRecord {
                id: raw.id,
                text: raw.text,
                labels,
            });
        }
        Ok(Dataset::new(records, SplitTag::Train))
    }

    /// Serialize to canonical JSONL (labels in canonical order).
    pub fn to_jsonl_string(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            let raw = RawRecord {
                id: record.id.clone(),
                text: record.text.clone(),
                labels: record.labels.iter().map(|l| l.as_str().to_string()).collect(),
            };
            out.push_str(&serde_json::to_string(&raw).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let path = path.as_ref();
        let mut file = File::create(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        file.write_all(self.to_jsonl_string().as_bytes())
            .map_err(|source| CorpusError::Io {
                path: path.display().to_string(),
                source,
            })
    }

    pub fn label_stats(&self) -> LabelStats {
        let mut counts = [0usize; Label::COUNT];
        for record in &self.records {
            for label in record.labels.iter() {
                counts[label.index()] += 1;
            }
        }
        LabelStats {
            counts,
            overall: self.records.len(),
        }
    }

    /// Keep `ceil(fraction * len)` records chosen uniformly at random under
    /// the given seed, preserving the original record order. `fraction = 1.0`
    /// returns the dataset unchanged.
    pub fn subsample_fraction(&self, fraction: f64, seed: u64) -> Result<Dataset, CorpusError> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(CorpusError::FractionOutOfRange(fraction));
        }
        if self.records.is_empty() {
            return Err(CorpusError::EmptyDataset);
        }
        if fraction == 1.0 {
            return Ok(self.clone());
        }
        let n = self.records.len();
        let take = ((fraction * n as f64).ceil() as usize).clamp(1, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, n, take).into_vec();
        chosen.sort_unstable();
        let records = chosen.into_iter().map(|i| self.records[i].clone()).collect();
        Ok(Dataset::new(records, self.split_tag))
    }

    /// Binary label matrix, one row per record, columns in canonical order.
    pub fn labels_to_matrix(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.records.len(), Label::COUNT));
        for (i, record) in self.records.iter().enumerate() {
            for label in record.labels.iter() {
                m[[i, label.index()]] = 1.0;
            }
        }
        m
    }
}
