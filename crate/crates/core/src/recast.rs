//! Mapping of dataset-native labels onto the binary Facts / NonFacts task.
//!
//! Mapping files are line oriented:
//!
//! ```text
//! # comment
//! BVA.Evidence = Facts
//! BVA.Finding = NonFacts
//! BVA.default = NonFacts      # or `reject`
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use log::warn;
use thiserror::Error;

use crate::corpus::{Corpus, DatasetId, MetaLabel};

pub const DEFAULT_MAPPING: &str = include_str!("default_mapping.cfg");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MappingError {
    #[error("mapping line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("no datasets configured")]
    NoDatasets,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecastError {
    #[error("mapping has no entry for dataset {0}")]
    UncoveredDataset(DatasetId),
    #[error("{dataset}: labels without a mapping (strict mode): {}", labels.join(", "))]
    UnmappedLabels { dataset: DatasetId, labels: Vec<String> },
}

/// What happens to labels missing from a dataset's table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefaultPolicy {
    NonFacts,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMapping {
    pub labels: BTreeMap<String, MetaLabel>,
    pub default: DefaultPolicy,
}

impl DatasetMapping {
    pub fn positive_labels(&self) -> impl Iterator<Item = &str> {
        self.labels
            .iter()
            .filter(|(_, m)| m.is_positive())
            .map(|(l, _)| l.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMapping {
    datasets: BTreeMap<DatasetId, DatasetMapping>,
}

impl LabelMapping {
    pub fn parse(config: &str) -> Result<Self, MappingError> {
        let mut datasets: BTreeMap<DatasetId, DatasetMapping> = BTreeMap::new();
        for (i, raw_line) in config.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| MappingError::Line { line: line_no, message };
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `dataset.label = Facts|NonFacts`".into()))?;
            let (dataset, label) = key
                .trim()
                .split_once('.')
                .ok_or_else(|| err(format!("key `{}` lacks a `dataset.` prefix", key.trim())))?;
            let dataset: DatasetId = dataset.parse().map_err(|e| err(format!("{e}")))?;
            let label = label.trim();
            let value = value.trim();
            if label.is_empty() {
                return Err(err("empty label".into()));
            }
            let entry = datasets.entry(dataset).or_insert_with(|| DatasetMapping {
                labels: BTreeMap::new(),
                default: DefaultPolicy::NonFacts,
            });
            if label == "default" {
                entry.default = match value {
                    "NonFacts" | "Non-Facts" => DefaultPolicy::NonFacts,
                    "reject" => DefaultPolicy::Reject,
                    other => return Err(err(format!("default must be NonFacts or reject, got `{other}`"))),
                };
                continue;
            }
            let meta: MetaLabel = value.parse().map_err(|e| err(format!("{e}")))?;
            match entry.labels.get(label) {
                Some(prev) if *prev != meta => {
                    return Err(err(format!("{dataset}.{label} mapped to both {prev} and {meta}")))
                }
                Some(_) => return Err(err(format!("duplicate mapping for {dataset}.{label}"))),
                None => {
                    entry.labels.insert(label.to_string(), meta);
                }
            }
        }
        if datasets.is_empty() {
            return Err(MappingError::NoDatasets);
        }
        Ok(LabelMapping { datasets })
    }

    pub fn dataset(&self, id: DatasetId) -> Option<&DatasetMapping> {
        self.datasets.get(&id)
    }

    pub fn datasets(&self) -> impl Iterator<Item = DatasetId> + '_ {
        self.datasets.keys().copied()
    }

    /// Copy of this mapping with every dataset switched to strict mode.
    pub fn strict(mut self) -> Self {
        for m in self.datasets.values_mut() {
            m.default = DefaultPolicy::Reject;
        }
        self
    }
}

impl Default for LabelMapping {
    fn default() -> Self {
        LabelMapping::parse(DEFAULT_MAPPING).expect("shipped mapping parses")
    }
}

pub fn load_mapping(config: &str) -> Result<LabelMapping, MappingError> {
    LabelMapping::parse(config)
}

/// Fills `meta_label` on every sentence. `source_label` and all other fields
/// are left untouched, so recasting twice is the same as recasting once.
pub fn recast_corpus(corpus: &Corpus, mapping: &LabelMapping) -> Result<Corpus, RecastError> {
    let table = mapping
        .dataset(corpus.dataset_id)
        .ok_or(RecastError::UncoveredDataset(corpus.dataset_id))?;
    let mut unmapped = BTreeSet::new();
    let mut out = corpus.clone();
    for s in out.documents.iter_mut().flat_map(|d| d.sentences.iter_mut()) {
        s.meta_label = Some(match table.labels.get(&s.source_label) {
            Some(m) => *m,
            None => {
                unmapped.insert(s.source_label.clone());
                MetaLabel::NonFacts
            }
        });
    }
    if !unmapped.is_empty() {
        let labels: Vec<String> = unmapped.into_iter().collect();
        match table.default {
            DefaultPolicy::Reject => {
                return Err(RecastError::UnmappedLabels {
                    dataset: corpus.dataset_id,
                    labels,
                })
            }
            DefaultPolicy::NonFacts => warn!(
                "{}: labels {} not in mapping, treated as NonFacts",
                corpus.dataset_id,
                labels.join(", ")
            ),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub facts: usize,
    pub non_facts: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.facts + self.non_facts
    }

    fn percent(part: usize, total: usize) -> usize {
        if total == 0 {
            0
        } else {
            ((part as f64 * 100.0 / total as f64) + 0.5).floor() as usize
        }
    }

    pub fn facts_percent(&self) -> usize {
        Self::percent(self.facts, self.total())
    }

    pub fn non_facts_percent(&self) -> usize {
        Self::percent(self.non_facts, self.total())
    }

    fn add(&mut self, other: ClassCounts) {
        self.facts += other.facts;
        self.non_facts += other.non_facts;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelDistribution {
    pub per_dataset: BTreeMap<DatasetId, ClassCounts>,
    pub pooled: ClassCounts,
}

/// Counts meta labels per dataset and pooled. Sentences without a meta label
/// are not counted.
pub fn label_distribution(corpora: &[Corpus]) -> LabelDistribution {
    let mut dist = LabelDistribution::default();
    for corpus in corpora {
        let mut counts = ClassCounts::default();
        for s in corpus.sentences() {
            match s.meta_label {
                Some(MetaLabel::Facts) => counts.facts += 1,
                Some(MetaLabel::NonFacts) => counts.non_facts += 1,
                None => {}
            }
        }
        dist.per_dataset.entry(corpus.dataset_id).or_default().add(counts);
        dist.pooled.add(counts);
    }
    dist
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

impl fmt::Display for LabelDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut header = format!("{:<10}", "Label");
        let mut facts = format!("{:<10}", "Facts");
        let mut non_facts = format!("{:<10}", "Non-Facts");
        let mut total = format!("{:<10}", "Total");
        let columns = self
            .per_dataset
            .iter()
            .map(|(id, c)| (id.to_string(), *c))
            .chain(std::iter::once(("Total".to_string(), self.pooled)));
        for (name, c) in columns {
            let _ = write!(header, " | {name:>14}");
            let _ = write!(
                facts,
                " | {:>14}",
                format!("{} ({}%)", thousands(c.facts), c.facts_percent())
            );
            let _ = write!(
                non_facts,
                " | {:>14}",
                format!("{} ({}%)", thousands(c.non_facts), c.non_facts_percent())
            );
            let _ = write!(total, " | {:>14}", thousands(c.total()));
        }
        writeln!(f, "{header}")?;
        writeln!(f, "{}", "-".repeat(header.len()))?;
        writeln!(f, "{facts}")?;
        writeln!(f, "{non_facts}")?;
        writeln!(f, "{}", "-".repeat(header.len()))?;
        writeln!(f, "{total}")
    }
}
