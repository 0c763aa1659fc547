//! Board of Veterans' Appeals decisions (VetClaims-JSON layout).
//!
//! One JSON file per decision. The reader accepts either an object with a
//! `sentences` array or a bare array of sentence objects. Each sentence
//! carries its text under `text` and its role under `rhetRole` (string or
//! list; only the first entry, the primary role, is used). Role names such as
//! `EvidenceSentence` or `LegalRuleSentence` are normalised to `Evidence` and
//! `Legal Rule`.

use std::path::Path;

use serde_json::Value;

use super::{assemble, collect_files, file_stem, is_interchange, read_interchange, warn_unknown_labels};
use crate::corpus::{Corpus, CorpusError, DatasetId, Document};

pub const BVA_LABELS: &[&str] = &["Finding", "Reasoning", "Evidence", "Legal Rule", "Citation"];

const TEXT_KEYS: &[&str] = &["text", "sentence", "sentText"];
const ROLE_KEYS: &[&str] = &["rhetRole", "rhetoricalRole", "role", "label"];

pub fn ingest_bva(path: &Path) -> Result<Corpus, CorpusError> {
    if is_interchange(path) {
        return read_interchange(DatasetId::Bva, path);
    }
    let files = collect_files(path, &["json"])?;
    assemble(DatasetId::Bva, path, files, "vetclaims-json", |file, text| {
        let doc = parse_decision(file, &text)?;
        warn_unknown_labels(DatasetId::Bva, &doc, BVA_LABELS);
        Ok(Some(doc))
    })
}

fn parse_decision(file: &Path, text: &str) -> Result<Document, CorpusError> {
    let parse_err = |message: String| CorpusError::Parse {
        path: file.display().to_string(),
        line: 0,
        message,
    };
    let value: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let sentences = match &value {
        Value::Array(items) => items,
        Value::Object(map) => match map.get("sentences") {
            Some(Value::Array(items)) => items,
            _ => return Err(parse_err("missing `sentences` array".into())),
        },
        _ => return Err(parse_err("expected an object or array".into())),
    };

    let mut pairs = Vec::with_capacity(sentences.len());
    for (i, s) in sentences.iter().enumerate() {
        let text = TEXT_KEYS
            .iter()
            .find_map(|k| s.get(*k).and_then(Value::as_str))
            .ok_or_else(|| parse_err(format!("sentence {i} has no text")))?;
        let role = ROLE_KEYS.iter().find_map(|k| s.get(*k)).and_then(primary_role);
        let label = normalize_role(role.unwrap_or(""));
        pairs.push((text.trim().to_string(), label));
    }
    Ok(Document::from_labelled(DatasetId::Bva, &file_stem(file), pairs))
}

fn primary_role(v: &Value) -> Option<&str> {
    match v {
        Value::String(s) => Some(s),
        Value::Array(items) => items.first().and_then(Value::as_str),
        _ => None,
    }
}

/// `LegalRuleSentence` -> `Legal Rule`; unknown roles are kept (spaced).
pub(crate) fn normalize_role(raw: &str) -> String {
    let raw = raw.trim();
    let stem = raw.strip_suffix("Sentence").unwrap_or(raw);
    if stem.is_empty() {
        return if raw.is_empty() { "Sentence".into() } else { raw.into() };
    }
    if stem.contains(' ') {
        return stem.to_string();
    }
    let mut out = String::with_capacity(stem.len() + 2);
    let mut prev_lower = false;
    for c in stem.chars() {
        if c.is_uppercase() && prev_lower {
            out.push(' ');
        }
        prev_lower = c.is_lowercase();
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_decision(dir: &Path, name: &str, roles: &[&str]) {
        let sentences: Vec<Value> = roles
            .iter()
            .enumerate()
            .map(|(i, r)| serde_json::json!({"sentID": i, "text": format!("Sentence {i} of {name}."), "rhetRole": [r]}))
            .collect();
        let doc = serde_json::json!({"caseNumber": name, "sentences": sentences});
        fs::write(dir.join(format!("{name}.json")), doc.to_string()).unwrap();
    }

    #[test]
    fn reads_two_decisions() {
        let dir = tempfile::tempdir().unwrap();
        write_decision(
            dir.path(),
            "1400029",
            &["FindingSentence", "EvidenceSentence", "LegalRuleSentence"],
        );
        write_decision(
            dir.path(),
            "1400030",
            &["EvidenceSentence", "CitationSentence", "ReasoningSentence"],
        );
        let corpus = ingest_bva(dir.path()).unwrap();
        assert_eq!(corpus.dataset_id, DatasetId::Bva);
        assert_eq!(corpus.documents.len(), 2);
        assert_eq!(corpus.sentence_count(), 6);
        for doc in &corpus.documents {
            let idx: Vec<_> = doc.sentences.iter().map(|s| s.sent_index).collect();
            assert_eq!(idx, vec![0, 1, 2]);
        }
        let labels: Vec<_> = corpus.documents[0]
            .sentences
            .iter()
            .map(|s| s.source_label.as_str())
            .collect();
        assert_eq!(labels, vec!["Finding", "Evidence", "Legal Rule"]);
    }

    #[test]
    fn empty_directory_is_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let err = ingest_bva(dir.path()).unwrap_err();
        assert!(matches!(err, CorpusError::Empty(_)), "{err}");
        assert!(err.to_string().contains("empty corpus"));
    }

    #[test]
    fn unknown_role_is_preserved_and_aux_tags_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let doc = serde_json::json!([
            {"text": "Header.", "rhetRole": "Sentence"},
            {"text": "He testified.", "rhetRole": ["EvidenceSentence", "FindingSentence"]},
            {"text": "Odd.", "rhetRole": ["MysterySentence"]}
        ]);
        fs::write(dir.path().join("d.json"), doc.to_string()).unwrap();
        let corpus = ingest_bva(dir.path()).unwrap();
        let labels: Vec<_> = corpus.sentences().map(|s| s.source_label.clone()).collect();
        assert_eq!(labels, vec!["Sentence", "Evidence", "Mystery"]);
    }

    #[test]
    fn malformed_json_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("bad.json"), "{not json").unwrap();
        assert!(matches!(ingest_bva(dir.path()), Err(CorpusError::Parse { .. })));
    }

    #[test]
    fn role_normalisation() {
        assert_eq!(normalize_role("LegalRuleSentence"), "Legal Rule");
        assert_eq!(normalize_role("Legal Rule"), "Legal Rule");
        assert_eq!(normalize_role("Evidence"), "Evidence");
        assert_eq!(normalize_role(""), "Sentence");
    }
}
