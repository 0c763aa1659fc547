//! Seeded synthetic corpora whose Facts sentences carry marker tokens.
//!
//! A Facts sentence holds 2 to 4 tokens from the signal vocabulary among
//! noise tokens; a NonFacts sentence holds only noise. Sibling corpora share
//! the noise vocabulary and a chosen fraction of the signal vocabulary, which
//! controls how much a lexical model can transfer between them.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Corpus, DatasetId, Document, MetaLabel, Provenance, SentenceRecord};
use crate::svm::tokenize;

pub const SENTENCE_TOKENS: RangeInclusive<usize> = 5..=25;
pub const SIGNAL_PER_FACT: RangeInclusive<usize> = 2..=4;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub dataset_id: DatasetId,
    pub n_documents: usize,
    /// Inclusive bounds on sentences per document.
    pub sentences_per_doc: (usize, usize),
    pub facts_ratio: f64,
    pub signal_vocab: Vec<String>,
    pub noise_vocab: Vec<String>,
    /// Fraction of `signal_vocab` shared with sibling specs.
    pub overlap: f64,
    pub seed: String,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if !(self.facts_ratio > 0.0 && self.facts_ratio < 1.0) {
            return bad(format!("facts_ratio {} outside (0, 1)", self.facts_ratio));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return bad(format!("overlap {} outside [0, 1]", self.overlap));
        }
        if self.n_documents == 0 {
            return bad("n_documents must be positive".into());
        }
        let (lo, hi) = self.sentences_per_doc;
        if lo == 0 || lo > hi {
            return bad(format!(
                "sentences_per_doc {lo}..={hi} is empty or allows empty documents"
            ));
        }
        if self.signal_vocab.is_empty() || self.noise_vocab.is_empty() {
            return bad("signal and noise vocabularies must be non-empty".into());
        }
        for t in self.signal_vocab.iter().chain(&self.noise_vocab) {
            if tokenize(t) != [t.as_str()] {
                return bad(format!("token `{t}` is not a single lowercase alphanumeric token"));
            }
        }
        let signal: BTreeSet<&String> = self.signal_vocab.iter().collect();
        if let Some(t) = self.noise_vocab.iter().find(|t| signal.contains(t)) {
            return bad(format!("token `{t}` is in both vocabularies"));
        }
        Ok(())
    }
}

fn rng_for(seed: &str) -> ChaCha8Rng {
    let digest: [u8; 32] = Sha256::digest(seed.as_bytes()).into();
    ChaCha8Rng::from_seed(digest)
}

/// Source labels consistent with the shipped mapping for each dataset.
fn source_labels(d: DatasetId) -> (&'static str, &'static [&'static str]) {
    match d {
        DatasetId::Bva => ("Evidence", &["Finding", "Reasoning", "Legal Rule", "Citation"]),
        DatasetId::Cb => ("Facts", &["Issue", "Conclusion", "Reasoning", "Rule"]),
        DatasetId::Isc => ("Facts", &["Argument", "Ratio", "Statute", "Precedent"]),
    }
}

fn sentence(rng: &mut ChaCha8Rng, spec: &SynthSpec, facts: bool) -> String {
    let len = rng.random_range(SENTENCE_TOKENS);
    let n_signal = if facts { rng.random_range(SIGNAL_PER_FACT) } else { 0 };
    let mut tokens: Vec<&str> = (0..len - n_signal)
        .map(|_| spec.noise_vocab.choose(rng).expect("non-empty").as_str())
        .collect();
    for _ in 0..n_signal {
        let at = rng.random_range(0..=tokens.len());
        tokens.insert(at, spec.signal_vocab.choose(rng).expect("non-empty").as_str());
    }
    let mut text = tokens.join(" ");
    if let Some(first) = text.get(..1) {
        text.replace_range(..1, &first.to_ascii_uppercase());
    }
    text.push('.');
    text
}

/// Generates a corpus with ground-truth meta labels already set.
///
/// The Facts count is exactly `round(facts_ratio * total)`, kept between 1
/// and `total - 1` when the corpus has at least two sentences.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Corpus, SynthError> {
    spec.validate()?;
    let mut rng = rng_for(&format!("{}:{}", spec.seed, spec.dataset_id));
    let (lo, hi) = spec.sentences_per_doc;
    let lengths: Vec<usize> = (0..spec.n_documents).map(|_| rng.random_range(lo..=hi)).collect();
    let total: usize = lengths.iter().sum();
    let mut n_facts = (spec.facts_ratio * total as f64).round() as usize;
    if total >= 2 {
        n_facts = n_facts.clamp(1, total - 1);
    }
    let mut labels: Vec<bool> = (0..total).map(|i| i < n_facts).collect();
    labels.shuffle(&mut rng);

    let (fact_label, other_labels) = source_labels(spec.dataset_id);
    let mut next = labels.into_iter();
    let documents = lengths
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let doc_id = format!("synth-{i:04}");
            let sentences = (0..n)
                .map(|j| {
                    let facts = next.next().expect("one label per sentence");
                    SentenceRecord {
                        dataset_id: spec.dataset_id,
                        doc_id: doc_id.clone(),
                        sent_index: j,
                        text: sentence(&mut rng, spec, facts),
                        source_label: if facts {
                            fact_label.to_string()
                        } else {
                            other_labels.choose(&mut rng).expect("non-empty").to_string()
                        },
                        meta_label: Some(if facts { MetaLabel::Facts } else { MetaLabel::NonFacts }),
                    }
                })
                .collect();
            Document {
                dataset_id: spec.dataset_id,
                doc_id,
                sentences,
            }
        })
        .collect();
    Corpus::new(
        spec.dataset_id,
        documents,
        Provenance {
            source: format!("synthetic:{}", spec.seed),
            reader_version: "synth/1".into(),
        },
    )
    .map_err(|e| SynthError::Invalid(e.to_string()))
}

/// Labels a sentence by the generation rule: Facts iff it contains a signal
/// token.
pub fn oracle_label(text: &str, signal_vocab: &[String]) -> MetaLabel {
    let signal: BTreeSet<&str> = signal_vocab.iter().map(String::as_str).collect();
    if tokenize(text).iter().any(|t| signal.contains(t.as_str())) {
        MetaLabel::Facts
    } else {
        MetaLabel::NonFacts
    }
}

/// Settings for a family of sibling corpora, one per dataset id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyConfig {
    pub n_documents: usize,
    pub sentences_per_doc: (usize, usize),
    pub facts_ratio: f64,
    /// Signal tokens per corpus.
    pub signal_size: usize,
    /// Noise tokens, shared by the whole family.
    pub noise_size: usize,
    pub overlap: f64,
    pub seed: String,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig {
            n_documents: 100,
            sentences_per_doc: (8, 16),
            facts_ratio: 0.35,
            signal_size: 10,
            noise_size: 100,
            overlap: 1.0,
            seed: "synth".into(),
        }
    }
}

/// One spec per dataset. Every corpus draws `round(overlap * signal_size)`
/// signal tokens from a shared pool and the rest from its own private pool.
pub fn family_specs(config: &FamilyConfig, datasets: &[DatasetId]) -> Result<Vec<SynthSpec>, SynthError> {
    if !(0.0..=1.0).contains(&config.overlap) {
        return Err(SynthError::Invalid(format!(
            "overlap {} outside [0, 1]",
            config.overlap
        )));
    }
    let shared = (config.overlap * config.signal_size as f64).round() as usize;
    let noise: Vec<String> = (0..config.noise_size).map(|i| format!("w{i}")).collect();
    let mut seen = BTreeSet::new();
    datasets
        .iter()
        .filter(|d| seen.insert(**d))
        .map(|d| {
            let own = d.as_str().to_ascii_lowercase();
            let signal: Vec<String> = (0..shared)
                .map(|i| format!("sig{i}"))
                .chain((shared..config.signal_size).map(|i| format!("sig{own}{i}")))
                .collect();
            let spec = SynthSpec {
                dataset_id: *d,
                n_documents: config.n_documents,
                sentences_per_doc: config.sentences_per_doc,
                facts_ratio: config.facts_ratio,
                signal_vocab: signal,
                noise_vocab: noise.clone(),
                overlap: config.overlap,
                seed: config.seed.clone(),
            };
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

/// Two sibling specs, for `a` and `b`.
pub fn twin_specs(config: &FamilyConfig, a: DatasetId, b: DatasetId) -> Result<(SynthSpec, SynthSpec), SynthError> {
    if a == b {
        return Err(SynthError::Invalid(
            "twin corpora need two different dataset ids".into(),
        ));
    }
    let mut specs = family_specs(config, &[a, b])?;
    let second = specs.pop().expect("two specs");
    Ok((specs.pop().expect("two specs"), second))
}
