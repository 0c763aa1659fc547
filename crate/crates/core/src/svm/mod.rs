//! TF-IDF + linear SVM baseline.

pub mod features;
pub mod grid;
pub mod solver;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::MetaLabel;

pub use features::{fit_vocabulary, tokenize, vectorize, FeatureConfig, FeatureError, SparseVector, Vocabulary};
pub use grid::{default_grid, grid_search, select_best, GridError, GridSearchOutcome, Trial};
pub use solver::{
    class_costs, primal_objective, train_linear_svm, ClassWeight, LinearSvm, SvmHyperparams, TrainError, TrainingInfo,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model file {path}: {message}")]
    Format { path: String, message: String },
}

/// A trained classifier together with the vocabulary and IDF statistics
/// needed to featurise new text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub vocabulary: Vocabulary,
    pub svm: LinearSvm,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    #[serde(flatten)]
    model: LinearModel,
}

impl LinearModel {
    pub fn hyperparams(&self) -> &SvmHyperparams {
        &self.svm.hyperparams
    }

    pub fn predict(&self, v: &SparseVector) -> (MetaLabel, f64) {
        self.svm.predict(v)
    }

    pub fn predict_text(&self, text: &str) -> (MetaLabel, f64) {
        self.svm.predict(&self.vocabulary.vectorize(text))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })
        .expect("model serializes")
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, ModelFileError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelFileError::Format {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelFileError::Format {
                path: origin.to_string(),
                message: format!("unsupported format_version {}", file.format_version),
            });
        }
        Ok(file.model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelFileError> {
        fs::write(path, self.to_json()).map_err(|e| ModelFileError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelFileError> {
        let text = fs::read_to_string(path).map_err(|e| ModelFileError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }
}

/// Featurisation settings plus the hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub features: FeatureConfig,
    pub grid: Vec<SvmHyperparams>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            features: FeatureConfig::default(),
            grid: default_grid(),
        }
    }
}
