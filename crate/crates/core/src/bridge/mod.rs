//! Classifier backends: the in-process SVM and majority baselines, and
//! external programs driven through the file-based job protocol.

pub mod process;
pub mod protocol;
pub mod stub;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::{MetaLabel, SentenceRecord};
use crate::svm::{grid_search, GridError, LinearModel, ModelFileError, SvmConfig};

pub use process::{invoke_backend, ProcessBackend};
pub use protocol::{
    parse_predictions, read_labelled_file, read_predict_file, write_job_manifest, write_labelled_file,
    write_predict_file, write_predictions, JobManifest, JobMode, PredictRow, Prediction, MANIFEST_FILE,
    PROTOCOL_VERSION,
};
pub use stub::{majority_label, parse_svm_config, run_majority_backend, run_svm_backend, MajorityModel};

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("job input {key} does not exist: {path}")]
    MissingInput { key: &'static str, path: String },
    #[error("cannot launch backend {backend} ({command}): {source}")]
    Launch {
        backend: String,
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("backend {backend} exited with {status}: {stderr}")]
    Failed {
        backend: String,
        status: String,
        stderr: String,
    },
    #[error("backend {backend} timed out after {secs} s")]
    Timeout { backend: String, secs: u64 },
    #[error("training failed: {0}")]
    Training(String),
    #[error(transparent)]
    Model(#[from] ModelFileError),
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

impl BridgeError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        BridgeError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<GridError> for BridgeError {
    fn from(e: GridError) -> Self {
        BridgeError::Training(e.to_string())
    }
}

/// An external backend: how to launch it and under which limits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendRegistration {
    pub backend_id: String,
    /// Program followed by fixed arguments; `--manifest <path>` is appended.
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
    /// Opaque configuration copied into every job manifest.
    #[serde(default)]
    pub config: String,
}

fn default_timeout() -> u64 {
    3600
}

/// A backend able to fit a model on a training pool.
pub trait Backend: Send + Sync {
    fn id(&self) -> &str;

    /// Trains on `train`, selecting on `validation`. `workdir` is private to
    /// this job and already exists.
    fn train(
        &self,
        train: &[SentenceRecord],
        validation: &[SentenceRecord],
        workdir: &Path,
    ) -> Result<Box<dyn TrainedModel>, BridgeError>;
}

pub trait TrainedModel: Send + Sync {
    /// One prediction per sentence, in input order. `workdir` is private to
    /// this call and already exists.
    fn predict(&self, sentences: &[SentenceRecord], workdir: &Path) -> Result<Vec<Prediction>, BridgeError>;

    /// Training details for the run registry.
    fn summary(&self) -> Value;

    /// Where the model artifact lives, if it was persisted.
    fn artifact(&self) -> Option<PathBuf>;
}

pub struct SvmBackend {
    id: String,
    config: SvmConfig,
}

impl SvmBackend {
    pub fn new(id: impl Into<String>, config: SvmConfig) -> Self {
        SvmBackend { id: id.into(), config }
    }
}

struct SvmTrained {
    model: LinearModel,
    summary: Value,
    path: PathBuf,
}

pub(crate) fn svm_summary(outcome: &crate::svm::GridSearchOutcome) -> Value {
    json!({
        "chosen": outcome.chosen,
        "val_f1": outcome.val_f1,
        "trials": outcome.trials,
        "training": outcome.model.svm.training,
        "vocabulary_size": outcome.model.vocabulary.len(),
    })
}

pub(crate) fn predict_with(model: &LinearModel, sentences: &[SentenceRecord]) -> Vec<Prediction> {
    sentences
        .iter()
        .map(|s| {
            let (predicted, score) = model.predict_text(&s.text);
            Prediction {
                doc_id: s.doc_id.clone(),
                sent_index: s.sent_index,
                predicted,
                score,
            }
        })
        .collect()
}

impl Backend for SvmBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn train(
        &self,
        train: &[SentenceRecord],
        validation: &[SentenceRecord],
        workdir: &Path,
    ) -> Result<Box<dyn TrainedModel>, BridgeError> {
        let outcome = grid_search(train, validation, &self.config.grid, self.config.features)?;
        let path = workdir.join("model.json");
        outcome.model.save(&path)?;
        Ok(Box::new(SvmTrained {
            summary: svm_summary(&outcome),
            model: outcome.model,
            path,
        }))
    }
}

impl TrainedModel for SvmTrained {
    fn predict(&self, sentences: &[SentenceRecord], _workdir: &Path) -> Result<Vec<Prediction>, BridgeError> {
        Ok(predict_with(&self.model, sentences))
    }

    fn summary(&self) -> Value {
        self.summary.clone()
    }

    fn artifact(&self) -> Option<PathBuf> {
        Some(self.path.clone())
    }
}

/// Always predicts the training majority class (NonFacts on ties).
pub struct MajorityBackend {
    id: String,
}

impl MajorityBackend {
    pub fn new(id: impl Into<String>) -> Self {
        MajorityBackend { id: id.into() }
    }
}

impl Backend for MajorityBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn train(
        &self,
        train: &[SentenceRecord],
        _validation: &[SentenceRecord],
        workdir: &Path,
    ) -> Result<Box<dyn TrainedModel>, BridgeError> {
        let model = MajorityModel::fit(train)?;
        let path = workdir.join("model.json");
        fs::write(&path, serde_json::to_string(&model).expect("model serializes"))
            .map_err(|e| BridgeError::io(&path, e))?;
        Ok(Box::new(MajorityTrained { model, path }))
    }
}

struct MajorityTrained {
    model: MajorityModel,
    path: PathBuf,
}

impl TrainedModel for MajorityTrained {
    fn predict(&self, sentences: &[SentenceRecord], _workdir: &Path) -> Result<Vec<Prediction>, BridgeError> {
        Ok(self
            .model
            .predict(sentences.iter().map(|s| (s.doc_id.as_str(), s.sent_index))))
    }

    fn summary(&self) -> Value {
        serde_json::to_value(&self.model).expect("model serializes")
    }

    fn artifact(&self) -> Option<PathBuf> {
        Some(self.path.clone())
    }
}

/// How a run names a backend in its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendSpec {
    Svm { backend_id: String },
    Majority { backend_id: String },
    Process(BackendRegistration),
}

impl BackendSpec {
    pub fn backend_id(&self) -> &str {
        match self {
            BackendSpec::Svm { backend_id } | BackendSpec::Majority { backend_id } => backend_id,
            BackendSpec::Process(r) => &r.backend_id,
        }
    }

    pub fn build(&self, svm: &SvmConfig) -> Result<Box<dyn Backend>, BridgeError> {
        Ok(match self {
            BackendSpec::Svm { backend_id } => Box::new(SvmBackend::new(backend_id.clone(), svm.clone())),
            BackendSpec::Majority { backend_id } => Box::new(MajorityBackend::new(backend_id.clone())),
            BackendSpec::Process(r) => {
                if r.command.is_empty() {
                    return Err(BridgeError::Config(format!(
                        "backend {} has an empty command",
                        r.backend_id
                    )));
                }
                Box::new(ProcessBackend::new(r.clone()))
            }
        })
    }
}

/// Builds every backend, rejecting duplicate ids.
pub fn build_backends(specs: &[BackendSpec], svm: &SvmConfig) -> Result<Vec<Box<dyn Backend>>, BridgeError> {
    let mut seen = std::collections::BTreeSet::new();
    specs
        .iter()
        .map(|s| {
            if !seen.insert(s.backend_id().to_string()) {
                return Err(BridgeError::Config(format!("duplicate backend id {}", s.backend_id())));
            }
            s.build(svm)
        })
        .collect()
}

pub(crate) fn labels(records: &[SentenceRecord]) -> Result<Vec<MetaLabel>, BridgeError> {
    crate::svm::grid::labels_of(records).map_err(BridgeError::from)
}
