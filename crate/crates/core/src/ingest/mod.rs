//! Readers for the three source corpora.
//!
//! Each reader targets a pinned snapshot of the public distribution (see the
//! README) and also accepts the harness's own JSON Lines interchange file as
//! a fallback: pass a path ending in `.jsonl`.

mod bva;
mod casebriefs;
mod isc;
pub mod sections;
pub mod sentences;

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{Corpus, CorpusError, DatasetId, Document, Provenance};

pub use bva::{ingest_bva, BVA_LABELS};
pub use casebriefs::{ingest_casebriefs, ingest_casebriefs_with};
pub use isc::{ingest_isc, ISC_LABELS};
pub use sections::{canonicalize_heading, segment_brief_sections, BriefSection, CanonicalSection, SectionRules};
pub use sentences::{split_sentences, SentenceSplitter};

pub const READER_VERSION: &str = "1";

/// Reads any dataset: interchange files directly, otherwise the dataset's
/// native reader.
pub fn ingest(dataset: DatasetId, path: &Path) -> Result<Corpus, CorpusError> {
    match dataset {
        DatasetId::Bva => ingest_bva(path),
        DatasetId::Cb => ingest_casebriefs(path),
        DatasetId::Isc => ingest_isc(path),
    }
}

/// Decodes bytes as UTF-8 with replacement and normalises to NFC.
pub fn decode_text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).nfc().collect()
}

pub(crate) fn is_interchange(path: &Path) -> bool {
    path.is_file() && path.extension().is_some_and(|e| e == "jsonl")
}

pub(crate) fn read_interchange(dataset: DatasetId, path: &Path) -> Result<Corpus, CorpusError> {
    let corpus = Corpus::read_jsonl(path)?;
    if corpus.dataset_id != dataset {
        return Err(CorpusError::Invalid(format!(
            "{} holds {} sentences, expected {}",
            path.display(),
            corpus.dataset_id,
            dataset
        )));
    }
    log_counts(&corpus);
    Ok(corpus)
}

/// Files under `root` (recursively) with one of `extensions`, sorted.
pub(crate) fn collect_files(root: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>, CorpusError> {
    if !root.exists() {
        return Err(CorpusError::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "path does not exist"),
        ));
    }
    if root.is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let entries = fs::read_dir(&dir).map_err(|e| CorpusError::io(&dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| CorpusError::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| extensions.iter().any(|x| x.eq_ignore_ascii_case(e)))
            {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

pub(crate) fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Parses files concurrently and assembles a corpus in `doc_id` order.
/// `parse` may return `Ok(None)` to skip a file.
pub(crate) fn assemble<F>(
    dataset: DatasetId,
    root: &Path,
    files: Vec<PathBuf>,
    reader: &str,
    parse: F,
) -> Result<Corpus, CorpusError>
where
    F: Fn(&Path, String) -> Result<Option<Document>, CorpusError> + Sync,
{
    let documents: Vec<Document> = files
        .par_iter()
        .map(|path| {
            let bytes = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
            parse(path, decode_text(&bytes))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .filter(|d| {
            if d.is_empty() {
                warn!("{dataset}: document {} has no sentences, skipped", d.doc_id);
            }
            !d.is_empty()
        })
        .collect();
    if documents.is_empty() {
        return Err(CorpusError::Empty(format!(
            "no {dataset} documents under {}",
            root.display()
        )));
    }
    let corpus = Corpus::new(
        dataset,
        documents,
        Provenance {
            source: root.display().to_string(),
            reader_version: format!("{reader}/{READER_VERSION}"),
        },
    )?;
    log_counts(&corpus);
    Ok(corpus)
}

fn log_counts(corpus: &Corpus) {
    info!(
        "{}: {} documents, {} sentences from {}",
        corpus.dataset_id,
        corpus.documents.len(),
        corpus.sentence_count(),
        corpus.provenance.source
    );
}

/// Warns once per unexpected label; the label itself is kept.
pub(crate) fn warn_unknown_labels(dataset: DatasetId, doc: &Document, known: &[&str]) {
    let mut reported: Vec<&str> = Vec::new();
    for s in &doc.sentences {
        let label = s.source_label.as_str();
        if !known.contains(&label) && !reported.contains(&label) {
            warn!(
                "{dataset}: document {} uses unrecognised label `{label}` (kept verbatim)",
                doc.doc_id
            );
            reported.push(label);
        }
    }
}
