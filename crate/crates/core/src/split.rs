//! Document-level train / validation / test assignment.
//!
//! Documents are ordered by the hex SHA-256 digest of
//! `seed ":" dataset ":" doc_id` and cut into folds by count, so the split is
//! reproducible in any language without sharing RNG state.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Corpus, DatasetId, SentenceRecord};

pub const DEFAULT_SEED: &str = "rr-v1";

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    BadRatios(SplitRatios),
    #[error("cannot split an empty {0} corpus")]
    EmptyCorpus(DatasetId),
    #[error("duplicate document {1} in {0}")]
    DuplicateDocument(DatasetId, String),
    #[error("document {1} of {0} has no fold assignment")]
    Unassigned(DatasetId, String),
    #[error("split manifest {path}: line {line}: {message}")]
    Manifest { path: String, line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fold {
    Train,
    Validation,
    Test,
}

impl Fold {
    pub const ALL: [Fold; 3] = [Fold::Train, Fold::Validation, Fold::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Fold::Train => "train",
            Fold::Validation => "validation",
            Fold::Test => "test",
        }
    }
}

impl fmt::Display for Fold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Fold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Fold::Train),
            "validation" => Ok(Fold::Validation),
            "test" => Ok(Fold::Test),
            other => Err(format!("unknown fold `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.5,
            validation: 0.25,
            test: 0.25,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<(), SplitError> {
        let parts = [self.train, self.validation, self.test];
        let ok = parts.iter().all(|p| p.is_finite() && *p >= 0.0) && (parts.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(SplitError::BadRatios(*self))
        }
    }

    /// Fold document counts for `n` documents: round-half-up for train and
    /// validation, the test fold takes the remainder.
    pub fn fold_sizes(&self, n: usize) -> (usize, usize, usize) {
        let round = |x: f64| (x + 0.5).floor() as usize;
        let train = round(self.train * n as f64).min(n);
        let validation = round(self.validation * n as f64).min(n - train);
        (train, validation, n - train - validation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: String,
    pub ratios: SplitRatios,
    folds: BTreeMap<(DatasetId, String), Fold>,
}

#[derive(Serialize, Deserialize)]
struct ManifestRow {
    dataset: DatasetId,
    doc_id: String,
    fold: Fold,
}

impl SplitAssignment {
    pub fn empty(seed: &str, ratios: SplitRatios) -> Self {
        SplitAssignment {
            seed: seed.to_string(),
            ratios,
            folds: BTreeMap::new(),
        }
    }

    pub fn fold_of(&self, dataset: DatasetId, doc_id: &str) -> Option<Fold> {
        self.folds.get(&(dataset, doc_id.to_string())).copied()
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (DatasetId, &str, Fold)> {
        self.folds.iter().map(|((d, id), f)| (*d, id.as_str(), *f))
    }

    /// Document counts per fold for one dataset.
    pub fn counts(&self, dataset: DatasetId) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for (_, _, fold) in self.iter().filter(|(d, _, _)| *d == dataset) {
            match fold {
                Fold::Train => c.0 += 1,
                Fold::Validation => c.1 += 1,
                Fold::Test => c.2 += 1,
            }
        }
        c
    }

    /// Folds in the assignments of `other` (for another dataset).
    pub fn merge(&mut self, other: SplitAssignment) {
        self.folds.extend(other.folds);
    }

    pub fn to_manifest_string(&self) -> String {
        let mut out = String::new();
        for ((dataset, doc_id), fold) in &self.folds {
            let row = ManifestRow {
                dataset: *dataset,
                doc_id: doc_id.clone(),
                fold: *fold,
            };
            out.push_str(&serde_json::to_string(&row).expect("manifest rows serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write_manifest(&self, path: &Path) -> Result<(), SplitError> {
        let io = |e| SplitError::Io {
            path: path.display().to_string(),
            source: e,
        };
        let mut out = BufWriter::new(fs::File::create(path).map_err(io)?);
        out.write_all(self.to_manifest_string().as_bytes()).map_err(io)?;
        out.flush().map_err(io)
    }

    /// Reads a manifest back. Seed and ratios are not part of the manifest
    /// and must be supplied.
    pub fn read_manifest(path: &Path, seed: &str, ratios: SplitRatios) -> Result<Self, SplitError> {
        let io = |e| SplitError::Io {
            path: path.display().to_string(),
            source: e,
        };
        let reader = BufReader::new(fs::File::open(path).map_err(io)?);
        let mut folds = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let row: ManifestRow = serde_json::from_str(&line).map_err(|e| SplitError::Manifest {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if folds.insert((row.dataset, row.doc_id.clone()), row.fold).is_some() {
                return Err(SplitError::DuplicateDocument(row.dataset, row.doc_id));
            }
        }
        Ok(SplitAssignment {
            seed: seed.to_string(),
            ratios,
            folds,
        })
    }
}

/// Hex digest that orders documents within a dataset.
pub fn order_key(seed: &str, dataset: DatasetId, doc_id: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(seed.as_bytes());
    hasher.update(b":");
    hasher.update(dataset.as_str().as_bytes());
    hasher.update(b":");
    hasher.update(doc_id.as_bytes());
    hex::encode(hasher.finalize())
}

/// Assigns the documents of one dataset, given only their ids.
pub fn assign_doc_ids<'a, I>(
    dataset: DatasetId,
    doc_ids: I,
    ratios: SplitRatios,
    seed: &str,
) -> Result<SplitAssignment, SplitError>
where
    I: IntoIterator<Item = &'a str>,
{
    ratios.validate()?;
    let mut seen = HashSet::new();
    let mut keyed = Vec::new();
    for id in doc_ids {
        if !seen.insert(id) {
            return Err(SplitError::DuplicateDocument(dataset, id.to_string()));
        }
        keyed.push((order_key(seed, dataset, id), id));
    }
    if keyed.is_empty() {
        return Err(SplitError::EmptyCorpus(dataset));
    }
    keyed.sort();
    let (n_train, n_val, _) = ratios.fold_sizes(keyed.len());
    let folds = keyed
        .into_iter()
        .enumerate()
        .map(|(rank, (_, id))| {
            let fold = if rank < n_train {
                Fold::Train
            } else if rank < n_train + n_val {
                Fold::Validation
            } else {
                Fold::Test
            };
            ((dataset, id.to_string()), fold)
        })
        .collect();
    Ok(SplitAssignment {
        seed: seed.to_string(),
        ratios,
        folds,
    })
}

pub fn assign_splits(corpus: &Corpus, ratios: SplitRatios, seed: &str) -> Result<SplitAssignment, SplitError> {
    assign_doc_ids(
        corpus.dataset_id,
        corpus.documents.iter().map(|d| d.doc_id.as_str()),
        ratios,
        seed,
    )
}

/// Splits several corpora with one seed into a single assignment.
pub fn assign_all(corpora: &[Corpus], ratios: SplitRatios, seed: &str) -> Result<SplitAssignment, SplitError> {
    let mut all = SplitAssignment::empty(seed, ratios);
    for c in corpora {
        all.merge(assign_splits(c, ratios, seed)?);
    }
    Ok(all)
}

/// Sentences of the documents assigned to `fold`, in `(doc_id, sent_index)` order.
pub fn materialize_fold(
    corpus: &Corpus,
    assignment: &SplitAssignment,
    fold: Fold,
) -> Result<Vec<SentenceRecord>, SplitError> {
    let mut docs: Vec<_> = Vec::new();
    for doc in &corpus.documents {
        let assigned = assignment
            .fold_of(corpus.dataset_id, &doc.doc_id)
            .ok_or_else(|| SplitError::Unassigned(corpus.dataset_id, doc.doc_id.clone()))?;
        if assigned == fold {
            docs.push(doc);
        }
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(docs.into_iter().flat_map(|d| d.sentences.iter().cloned()).collect())
}
