//! Sentence, document and corpus types shared by every stage of the harness,
//! plus the JSON Lines interchange format.
//!
//! The interchange format is one JSON object per sentence with the keys
//! `dataset`, `doc_id`, `sent_index`, `text`, `source_label` and `meta_label`
//! (in that order, `meta_label` is `null` when unset). Lines are sorted by
//! `(doc_id, sent_index)`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The three corpora the harness knows about. The derived ordering
/// (`BVA < CB < ISC`) is the canonical ordering used for pools and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DatasetId {
    #[serde(rename = "BVA")]
    Bva,
    #[serde(rename = "CB")]
    Cb,
    #[serde(rename = "ISC")]
    Isc,
}

impl DatasetId {
    pub const ALL: [DatasetId; 3] = [DatasetId::Bva, DatasetId::Cb, DatasetId::Isc];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetId::Bva => "BVA",
            DatasetId::Cb => "CB",
            DatasetId::Isc => "ISC",
        }
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetId {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BVA" => Ok(DatasetId::Bva),
            "CB" => Ok(DatasetId::Cb),
            "ISC" => Ok(DatasetId::Isc),
            other => Err(CorpusError::UnknownDataset(other.to_string())),
        }
    }
}

/// Binary meta label. `Facts` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetaLabel {
    Facts,
    NonFacts,
}

impl MetaLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            MetaLabel::Facts => "Facts",
            MetaLabel::NonFacts => "NonFacts",
        }
    }

    pub fn is_positive(self) -> bool {
        self == MetaLabel::Facts
    }

    /// `+1.0` for Facts, `-1.0` for NonFacts.
    pub fn sign(self) -> f64 {
        match self {
            MetaLabel::Facts => 1.0,
            MetaLabel::NonFacts => -1.0,
        }
    }
}

impl fmt::Display for MetaLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetaLabel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Facts" => Ok(MetaLabel::Facts),
            "NonFacts" | "Non-Facts" => Ok(MetaLabel::NonFacts),
            other => Err(CorpusError::UnknownMetaLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown dataset id `{0}`")]
    UnknownDataset(String),
    #[error("unknown meta label `{0}`")]
    UnknownMetaLabel(String),
    #[error("empty corpus: {0}")]
    Empty(String),
    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("invalid corpus: {0}")]
    Invalid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// One sentence: the unit of classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    #[serde(rename = "dataset")]
    pub dataset_id: DatasetId,
    pub doc_id: String,
    pub sent_index: usize,
    pub text: String,
    pub source_label: String,
    pub meta_label: Option<MetaLabel>,
}

impl SentenceRecord {
    pub fn key(&self) -> (&str, usize) {
        (&self.doc_id, self.sent_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub dataset_id: DatasetId,
    pub doc_id: String,
    pub sentences: Vec<SentenceRecord>,
}

impl Document {
    /// Builds a document from `(text, source_label)` pairs, numbering the
    /// sentences from zero. Blank sentences are dropped before numbering.
    pub fn from_labelled<I, T, L>(dataset_id: DatasetId, doc_id: &str, sentences: I) -> Self
    where
        I: IntoIterator<Item = (T, L)>,
        T: Into<String>,
        L: Into<String>,
    {
        let sentences = sentences
            .into_iter()
            .map(|(t, l)| (t.into(), l.into()))
            .filter(|(t, _)| !t.trim().is_empty())
            .enumerate()
            .map(|(i, (text, label))| SentenceRecord {
                dataset_id,
                doc_id: doc_id.to_string(),
                sent_index: i,
                text,
                source_label: label,
                meta_label: None,
            })
            .collect();
        Document {
            dataset_id,
            doc_id: doc_id.to_string(),
            sentences,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub reader_version: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub dataset_id: DatasetId,
    pub documents: Vec<Document>,
    pub provenance: Provenance,
}

impl Corpus {
    /// Assembles a corpus, sorting documents by `doc_id` and checking the
    /// structural invariants.
    pub fn new(
        dataset_id: DatasetId,
        mut documents: Vec<Document>,
        provenance: Provenance,
    ) -> Result<Self, CorpusError> {
        documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let corpus = Corpus {
            dataset_id,
            documents,
            provenance,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::new();
        for doc in &self.documents {
            if doc.dataset_id != self.dataset_id {
                return Err(CorpusError::Invalid(format!(
                    "document {} belongs to {} inside a {} corpus",
                    doc.doc_id, doc.dataset_id, self.dataset_id
                )));
            }
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(CorpusError::Invalid(format!(
                    "duplicate doc_id {} in {}",
                    doc.doc_id, self.dataset_id
                )));
            }
            if doc.sentences.is_empty() {
                return Err(CorpusError::Invalid(format!(
                    "document {} has no sentences",
                    doc.doc_id
                )));
            }
            for (i, s) in doc.sentences.iter().enumerate() {
                if s.sent_index != i || s.doc_id != doc.doc_id || s.dataset_id != self.dataset_id {
                    return Err(CorpusError::Invalid(format!(
                        "document {} sentence {} is out of place (sent_index {})",
                        doc.doc_id, i, s.sent_index
                    )));
                }
                if s.text.trim().is_empty() {
                    return Err(CorpusError::Invalid(format!(
                        "document {} sentence {} has empty text",
                        doc.doc_id, i
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &SentenceRecord> {
        self.documents.iter().flat_map(|d| d.sentences.iter())
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents
            .binary_search_by(|d| d.doc_id.as_str().cmp(doc_id))
            .ok()
            .map(|i| &self.documents[i])
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), CorpusError> {
        let file = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
        let mut out = BufWriter::new(file);
        write_records(&mut out, self.sentences()).map_err(|e| CorpusError::io(path, e))?;
        out.flush().map_err(|e| CorpusError::io(path, e))
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        write_records(&mut buf, self.sentences()).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Reads an interchange file holding a single dataset.
    pub fn read_jsonl(path: &Path) -> Result<Self, CorpusError> {
        let file = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
        let records = read_records(BufReader::new(file), &path.display().to_string())?;
        Self::from_records(records, path)
    }

    pub fn from_records(records: Vec<SentenceRecord>, source: &Path) -> Result<Self, CorpusError> {
        let Some(first) = records.first() else {
            return Err(CorpusError::Empty(source.display().to_string()));
        };
        let dataset_id = first.dataset_id;
        let mut by_doc: BTreeMap<String, Vec<SentenceRecord>> = BTreeMap::new();
        for r in records {
            if r.dataset_id != dataset_id {
                return Err(CorpusError::Invalid(format!(
                    "{}: mixes datasets {} and {}",
                    source.display(),
                    dataset_id,
                    r.dataset_id
                )));
            }
            by_doc.entry(r.doc_id.clone()).or_default().push(r);
        }
        let documents = by_doc
            .into_iter()
            .map(|(doc_id, mut sentences)| {
                sentences.sort_by_key(|s| s.sent_index);
                Document {
                    dataset_id,
                    doc_id,
                    sentences,
                }
            })
            .collect();
        Corpus::new(
            dataset_id,
            documents,
            Provenance {
                source: source.display().to_string(),
                reader_version: format!("jsonl/{}", crate::ingest::READER_VERSION),
            },
        )
    }
}

/// Serializes records one per line in the interchange layout.
pub fn write_records<'a, W, I>(out: &mut W, records: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a SentenceRecord>,
{
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(reader: R, source: &str) -> Result<Vec<SentenceRecord>, CorpusError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Io {
            path: source.to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SentenceRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            path: source.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
