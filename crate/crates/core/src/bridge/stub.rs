//! Protocol-side entry points of the two reference backends, used by their
//! standalone executables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::protocol::{read_labelled_file, read_predict_file, write_predictions, JobManifest, JobMode, Prediction};
use super::{labels, predict_with, svm_summary, BridgeError};
use crate::corpus::{MetaLabel, SentenceRecord};
use crate::svm::{grid_search, LinearModel, SvmConfig};

/// Majority class of `labels`; ties (including no labels) go to NonFacts.
pub fn majority_label(labels: &[MetaLabel]) -> MetaLabel {
    let facts = labels.iter().filter(|l| l.is_positive()).count();
    if 2 * facts > labels.len() {
        MetaLabel::Facts
    } else {
        MetaLabel::NonFacts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityModel {
    pub majority: MetaLabel,
    pub facts_fraction: f64,
    pub n_train: usize,
}

impl MajorityModel {
    pub fn fit(train: &[SentenceRecord]) -> Result<Self, BridgeError> {
        let y = labels(train)?;
        if y.is_empty() {
            return Err(BridgeError::Training("no training sentences".into()));
        }
        let facts = y.iter().filter(|l| l.is_positive()).count();
        Ok(MajorityModel {
            majority: majority_label(&y),
            facts_fraction: facts as f64 / y.len() as f64,
            n_train: y.len(),
        })
    }

    pub fn predict<'a, I>(&self, keys: I) -> Vec<Prediction>
    where
        I: IntoIterator<Item = (&'a str, usize)>,
    {
        keys.into_iter()
            .map(|(doc_id, sent_index)| Prediction {
                doc_id: doc_id.to_string(),
                sent_index,
                predicted: self.majority,
                score: self.facts_fraction,
            })
            .collect()
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), BridgeError> {
    let text = serde_json::to_string(value).map_err(|e| BridgeError::Protocol(e.to_string()))?;
    fs::write(path, text).map_err(|e| BridgeError::io(path, e))
}

fn require<'a>(path: &'a Option<std::path::PathBuf>, key: &str) -> Result<&'a Path, BridgeError> {
    path.as_deref()
        .ok_or_else(|| BridgeError::Protocol(format!("manifest lacks {key}")))
}

/// Serves one job for the majority-class backend.
pub fn run_majority_backend(manifest_path: &Path) -> Result<(), BridgeError> {
    let job = JobManifest::read(manifest_path)?;
    match job.mode {
        JobMode::Train => {
            let train = read_labelled_file(require(&job.train_path, "train_path")?)?;
            let model = MajorityModel::fit(&train)?;
            write_json(&job.model_path, &model)?;
            write_json(&job.output_path, &model)
        }
        JobMode::Predict => {
            let text = fs::read_to_string(&job.model_path).map_err(|e| BridgeError::io(&job.model_path, e))?;
            let model: MajorityModel =
                serde_json::from_str(&text).map_err(|e| BridgeError::Protocol(format!("bad model file: {e}")))?;
            let rows = read_predict_file(require(&job.predict_path, "predict_path")?)?;
            let preds = model.predict(rows.iter().map(|r| (r.doc_id.as_str(), r.sent_index)));
            write_predictions(&job.output_path, &preds)
        }
    }
}

/// Parses the manifest's config blob as an [`SvmConfig`] in TOML; an empty
/// blob means the defaults.
pub fn parse_svm_config(blob: &str) -> Result<SvmConfig, BridgeError> {
    if blob.trim().is_empty() {
        return Ok(SvmConfig::default());
    }
    toml::from_str(blob).map_err(|e| BridgeError::Config(e.message().to_string()))
}

/// Serves one job for the SVM baseline run as an external process.
pub fn run_svm_backend(manifest_path: &Path) -> Result<(), BridgeError> {
    let job = JobManifest::read(manifest_path)?;
    match job.mode {
        JobMode::Train => {
            let config = parse_svm_config(&job.config)?;
            let train = read_labelled_file(require(&job.train_path, "train_path")?)?;
            let validation = read_labelled_file(require(&job.validation_path, "validation_path")?)?;
            let outcome = grid_search(&train, &validation, &config.grid, config.features)?;
            outcome.model.save(&job.model_path)?;
            write_json(&job.output_path, &svm_summary(&outcome))
        }
        JobMode::Predict => {
            let model = LinearModel::load(&job.model_path)?;
            let rows: Vec<SentenceRecord> = read_predict_file(require(&job.predict_path, "predict_path")?)?
                .into_iter()
                .map(|r| SentenceRecord {
                    dataset_id: r.dataset,
                    doc_id: r.doc_id,
                    sent_index: r.sent_index,
                    text: r.text,
                    source_label: String::new(),
                    meta_label: None,
                })
                .collect();
            write_predictions(&job.output_path, &predict_with(&model, &rows))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use MetaLabel::{Facts, NonFacts};

    #[test]
    fn majority_rule() {
        assert_eq!(majority_label(&[Facts, NonFacts, NonFacts]), NonFacts);
        assert_eq!(majority_label(&[Facts, Facts, NonFacts]), Facts);
        assert_eq!(majority_label(&[Facts, NonFacts]), NonFacts);
        assert_eq!(majority_label(&[]), NonFacts);
    }

    #[test]
    fn svm_config_blob() {
        assert_eq!(parse_svm_config("").unwrap(), SvmConfig::default());
        let cfg = parse_svm_config("[features]\nmin_n = 1\nmax_n = 2\nmin_df = 1\n").unwrap();
        assert_eq!(cfg.features.max_n, 2);
        assert_eq!(cfg.grid.len(), 20);
        assert!(parse_svm_config("grid = 3").is_err());
    }
}
