//! Indian Supreme Court opinions (Law-AI semantic-segmentation layout).
//!
//! One `.txt` file per opinion, one sentence per line as
//! `<sentence> TAB <label>`. Label spellings from the distribution are mapped
//! onto the seven role names used throughout the harness.

use std::path::Path;

use log::warn;

use super::{assemble, collect_files, file_stem, is_interchange, read_interchange, warn_unknown_labels};
use crate::corpus::{Corpus, CorpusError, DatasetId, Document};

pub const ISC_LABELS: &[&str] = &[
    "Facts",
    "Ruling (lower court)",
    "Argument",
    "Ratio",
    "Statute",
    "Precedent",
    "Ruling (present court)",
];

pub fn ingest_isc(path: &Path) -> Result<Corpus, CorpusError> {
    if is_interchange(path) {
        return read_interchange(DatasetId::Isc, path);
    }
    let files = collect_files(path, &["txt", "tsv"])?;
    assemble(DatasetId::Isc, path, files, "law-ai-semseg", |file, text| {
        let doc = parse_opinion(file, &text)?;
        warn_unknown_labels(DatasetId::Isc, &doc, ISC_LABELS);
        Ok(Some(doc))
    })
}

fn parse_opinion(file: &Path, text: &str) -> Result<Document, CorpusError> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((sentence, label)) = line.rsplit_once('\t') else {
            return Err(CorpusError::Parse {
                path: file.display().to_string(),
                line: i + 1,
                message: "expected `<sentence>\\t<label>`".into(),
            });
        };
        if sentence.trim().is_empty() {
            warn!(
                "ISC: {} line {} has a label but no text, skipped",
                file.display(),
                i + 1
            );
            continue;
        }
        pairs.push((sentence.trim().to_string(), canonical_label(label)));
    }
    Ok(Document::from_labelled(DatasetId::Isc, &file_stem(file), pairs))
}

fn canonical_label(raw: &str) -> String {
    let key: String = raw.to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect();
    let mapped = match key.as_str() {
        "facts" | "fact" => "Facts",
        "rulingbylowercourt" | "rulinglowercourt" | "lowercourtruling" | "rlc" => "Ruling (lower court)",
        "argument" | "arguments" => "Argument",
        "ratio" | "ratioofthedecision" | "ratiodecidendi" => "Ratio",
        "statute" | "statutes" => "Statute",
        "precedent" | "precedents" => "Precedent",
        "rulingbypresentcourt" | "rulingpresentcourt" | "presentcourtruling" | "rpc" => "Ruling (present court)",
        _ => return raw.trim().to_string(),
    };
    mapped.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn single_sentence_document() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("case1.txt"),
            "The appeal is dismissed on merits.\tRatio\n",
        )
        .unwrap();
        let corpus = ingest_isc(dir.path()).unwrap();
        assert_eq!(corpus.documents.len(), 1);
        assert_eq!(corpus.sentence_count(), 1);
        let s = corpus.sentences().next().unwrap();
        assert_eq!(s.source_label, "Ratio");
        assert_eq!(s.doc_id, "case1");
    }

    #[test]
    fn out_of_set_label_is_kept() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("c.txt"), "A fact.\tFacts\nStrange.\tFoo\n").unwrap();
        let corpus = ingest_isc(dir.path()).unwrap();
        let labels: Vec<_> = corpus.sentences().map(|s| s.source_label.as_str()).collect();
        assert_eq!(labels, vec!["Facts", "Foo"]);
    }

    #[test]
    fn distribution_spellings_are_canonicalised() {
        assert_eq!(canonical_label("Ruling by Lower Court"), "Ruling (lower court)");
        assert_eq!(canonical_label("Ratio of the decision"), "Ratio");
        assert_eq!(canonical_label("Ruling by Present Court"), "Ruling (present court)");
        assert_eq!(canonical_label(" Precedent\r"), "Precedent");
    }

    #[test]
    fn line_without_tab_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("c.txt"), "no label here\n").unwrap();
        assert!(matches!(
            ingest_isc(dir.path()),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn interchange_fallback() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("c.txt"), "A fact.\tFacts\nB.\tArgument\n").unwrap();
        let corpus = ingest_isc(dir.path()).unwrap();
        let jsonl = dir.path().join("isc.jsonl");
        corpus.write_jsonl(&jsonl).unwrap();
        let again = ingest_isc(&jsonl).unwrap();
        assert_eq!(again.documents, corpus.documents);
        assert!(ingest_super_mismatch(&jsonl));
    }

    fn ingest_super_mismatch(path: &Path) -> bool {
        crate::ingest::ingest_bva(path).is_err()
    }
}
