//! Word n-gram TF-IDF features.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SentenceRecord;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("cannot fit a vocabulary on zero sentences")]
    NoSentences,
    #[error("vocabulary is empty (no n-gram reaches min_df = {0})")]
    EmptyVocabulary(usize),
    #[error("invalid n-gram range {0}..={1}")]
    BadRange(usize, usize),
}

/// Lowercased maximal runs of Unicode letters and digits.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Every n-gram of `tokens` for `n` in `min_n..=max_n`, tokens joined by a
/// single space.
pub fn ngrams(tokens: &[String], min_n: usize, max_n: usize) -> impl Iterator<Item = String> + '_ {
    (min_n..=max_n).flat_map(move |n| tokens.windows(n).map(|w| w.join(" ")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub min_n: usize,
    pub max_n: usize,
    pub min_df: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            min_n: 1,
            max_n: 3,
            min_df: 1,
        }
    }
}

/// Sorted sparse vector of `(feature index, weight)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds a vector from unsorted pairs; duplicate indices are summed and
    /// zero weights dropped.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, w) in pairs {
            match entries.last_mut() {
                Some((last, acc)) if *last == i => *acc += w,
                _ => entries.push((i, w)),
            }
        }
        entries.retain(|&(_, w)| w != 0.0);
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Dot product with a dense weight vector. Indices past its end count as zero.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, w)| dense.get(i).map_or(0.0, |d| d * w))
            .sum()
    }

    pub fn add_scaled_to(&self, dense: &mut [f64], scale: f64) {
        for &(i, w) in &self.entries {
            dense[i] += scale * w;
        }
    }

    fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for (_, w) in &mut self.entries {
                *w /= n;
            }
        }
    }
}

/// Fitted n-gram vocabulary with sentence-level document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    config: FeatureConfig,
    ngrams: Vec<String>,
    index: HashMap<String, usize>,
    document_frequency: Vec<usize>,
    idf: Vec<f64>,
    n_train_sentences: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    config: FeatureConfig,
    n_train_sentences: usize,
    ngrams: Vec<String>,
    document_frequency: Vec<usize>,
}

impl From<VocabularyFile> for Vocabulary {
    fn from(f: VocabularyFile) -> Self {
        Vocabulary::from_parts(f.config, f.ngrams, f.document_frequency, f.n_train_sentences)
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            config: v.config,
            n_train_sentences: v.n_train_sentences,
            ngrams: v.ngrams,
            document_frequency: v.document_frequency,
        }
    }
}

/// Smoothed inverse document frequency `ln((1 + n) / (1 + df)) + 1`.
pub fn smoothed_idf(n_sentences: usize, df: usize) -> f64 {
    ((1.0 + n_sentences as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl Vocabulary {
    fn from_parts(config: FeatureConfig, ngrams: Vec<String>, df: Vec<usize>, n: usize) -> Self {
        let index = ngrams.iter().enumerate().map(|(i, g)| (g.clone(), i)).collect();
        let idf = df.iter().map(|&d| smoothed_idf(n, d)).collect();
        Vocabulary {
            config,
            ngrams,
            index,
            document_frequency: df,
            idf,
            n_train_sentences: n,
        }
    }

    pub fn fit<'a, I>(texts: I, config: FeatureConfig) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if config.min_n == 0 || config.min_n > config.max_n {
            return Err(FeatureError::BadRange(config.min_n, config.max_n));
        }
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut n = 0;
        for text in texts {
            n += 1;
            let tokens = tokenize(text);
            let unique: HashSet<String> = ngrams(&tokens, config.min_n, config.max_n).collect();
            for g in unique {
                *df.entry(g).or_insert(0) += 1;
            }
        }
        if n == 0 {
            return Err(FeatureError::NoSentences);
        }
        let kept: BTreeMap<String, usize> = df.into_iter().filter(|(_, d)| *d >= config.min_df).collect();
        if kept.is_empty() {
            return Err(FeatureError::EmptyVocabulary(config.min_df));
        }
        let (ngrams, df): (Vec<_>, Vec<_>) = kept.into_iter().unzip();
        Ok(Self::from_parts(config, ngrams, df, n))
    }

    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }

    pub fn config(&self) -> FeatureConfig {
        self.config
    }

    pub fn n_train_sentences(&self) -> usize {
        self.n_train_sentences
    }

    pub fn index_of(&self, ngram: &str) -> Option<usize> {
        self.index.get(ngram).copied()
    }

    pub fn ngram(&self, index: usize) -> &str {
        &self.ngrams[index]
    }

    pub fn document_frequency(&self, index: usize) -> usize {
        self.document_frequency[index]
    }

    pub fn idf(&self, index: usize) -> f64 {
        self.idf[index]
    }

    /// L2-normalised TF-IDF vector; n-grams outside the vocabulary are ignored.
    pub fn vectorize(&self, text: &str) -> SparseVector {
        let tokens = tokenize(text);
        let mut tf: HashMap<usize, f64> = HashMap::new();
        for g in ngrams(&tokens, self.config.min_n, self.config.max_n) {
            if let Some(&i) = self.index.get(&g) {
                *tf.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut v = SparseVector::from_pairs(tf.into_iter().map(|(i, c)| (i, c * self.idf[i])).collect());
        v.normalize();
        v
    }
}

pub fn fit_vocabulary(train: &[SentenceRecord], config: FeatureConfig) -> Result<Vocabulary, FeatureError> {
    Vocabulary::fit(train.iter().map(|s| s.text.as_str()), config)
}

pub fn vectorize(text: &str, vocab: &Vocabulary) -> SparseVector {
    vocab.vectorize(text)
}
