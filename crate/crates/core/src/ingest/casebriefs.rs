//! Case brief archive reader.
//!
//! Each `.txt`, `.md` or `.html` file is one brief. HTML is flattened to text
//! first (block elements become line breaks). The brief is segmented into
//! headed sections; every section with a recognised heading is split into
//! sentences labelled with the section's canonical name.

use std::path::Path;
use std::sync::OnceLock;

use log::warn;
use regex::Regex;

use super::sections::{CanonicalSection, SectionRules};
use super::sentences::SentenceSplitter;
use super::{assemble, collect_files, file_stem, is_interchange, read_interchange};
use crate::corpus::{Corpus, CorpusError, DatasetId, Document};

pub fn ingest_casebriefs(path: &Path) -> Result<Corpus, CorpusError> {
    ingest_casebriefs_with(path, &SectionRules::default(), &SentenceSplitter::default())
}

pub fn ingest_casebriefs_with(
    path: &Path,
    rules: &SectionRules,
    splitter: &SentenceSplitter,
) -> Result<Corpus, CorpusError> {
    if is_interchange(path) {
        return read_interchange(DatasetId::Cb, path);
    }
    let files = collect_files(path, &["txt", "md", "html", "htm"])?;
    assemble(DatasetId::Cb, path, files, "casebrief-archive", |file, raw| {
        let is_html = file
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"));
        let text = if is_html { html_to_text(&raw) } else { raw };
        Ok(brief_document(&file_stem(file), &text, rules, splitter))
    })
}

/// Builds the sentence list of one brief, or `None` when no recognised
/// section was found.
pub(crate) fn brief_document(
    doc_id: &str,
    text: &str,
    rules: &SectionRules,
    splitter: &SentenceSplitter,
) -> Option<Document> {
    let sections = rules.segment(text);
    let known: Vec<_> = sections
        .iter()
        .filter(|s| s.canonical != CanonicalSection::Unknown)
        .collect();
    if known.is_empty() {
        warn!("CB: brief {doc_id} has no recognised sections, skipped");
        return None;
    }
    let pairs = known.iter().flat_map(|section| {
        splitter
            .split(&section.body)
            .into_iter()
            .map(move |s| (collapse_ws(s), section.canonical.label()))
    });
    Some(Document::from_labelled(DatasetId::Cb, doc_id, pairs))
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn html_to_text(html: &str) -> String {
    static DROP: OnceLock<Regex> = OnceLock::new();
    static BLOCK: OnceLock<Regex> = OnceLock::new();
    static TAG: OnceLock<Regex> = OnceLock::new();
    let drop = DROP.get_or_init(|| Regex::new(r"(?is)<(script|style|head)\b.*?</(script|style|head)>").unwrap());
    let block = BLOCK.get_or_init(|| {
        Regex::new(r"(?i)</?(p|br|div|h[1-6]|li|ul|ol|tr|table|section|article|header|footer)\b[^>]*>").unwrap()
    });
    let tag = TAG.get_or_init(|| Regex::new(r"<[^>]*>").unwrap());
    let text = drop.replace_all(html, "");
    let text = block.replace_all(&text, "\n");
    let text = tag.replace_all(&text, "");
    text.replace("&nbsp;", " ")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&apos;", "'")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn facts_and_issue_brief() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("smith.txt"),
            "Smith v. Jones\nFacts:\nSmith hired Jones. Jones never came.\nIssue:\nIs there a contract?\n",
        )
        .unwrap();
        let corpus = ingest_casebriefs(dir.path()).unwrap();
        let got: Vec<_> = corpus
            .sentences()
            .map(|s| (s.source_label.as_str(), s.text.as_str()))
            .collect();
        assert_eq!(
            got,
            vec![
                ("Facts", "Smith hired Jones."),
                ("Facts", "Jones never came."),
                ("Issue", "Is there a contract?")
            ]
        );
    }

    #[test]
    fn brief_without_known_sections_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "Gibberish:\nNothing useful here.").unwrap();
        fs::write(dir.path().join("b.txt"), "Holding:\nAffirmed.").unwrap();
        let corpus = ingest_casebriefs(dir.path()).unwrap();
        assert_eq!(corpus.documents.len(), 1);
        assert_eq!(corpus.documents[0].doc_id, "b");
        assert_eq!(corpus.documents[0].sentences[0].source_label, "Conclusion");
    }

    #[test]
    fn only_gibberish_means_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "Gibberish:\nNothing.").unwrap();
        assert!(matches!(ingest_casebriefs(dir.path()), Err(CorpusError::Empty(_))));
    }

    #[test]
    fn html_briefs_are_flattened() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("h.html"),
            "<html><head><title>x</title></head><body><h2>Procedural History</h2>\
             <p>The trial court ruled for Roe &amp; Co. The appellate court reversed.</p>\
             <h2>Rule of Law</h2><p>Contracts need consideration.</p></body></html>",
        )
        .unwrap();
        let corpus = ingest_casebriefs(dir.path()).unwrap();
        let got: Vec<_> = corpus
            .sentences()
            .map(|s| (s.source_label.as_str(), s.text.as_str()))
            .collect();
        assert_eq!(
            got,
            vec![
                (
                    "Procedural History",
                    "The trial court ruled for Roe & Co. The appellate court reversed."
                ),
                ("Rule", "Contracts need consideration.")
            ]
        );
    }
}
