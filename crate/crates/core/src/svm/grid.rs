//! Validation-driven grid search over SVM hyperparameters.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::features::{FeatureConfig, FeatureError, SparseVector, Vocabulary};
use super::solver::{train_linear_svm, ClassWeight, LinearSvm, SvmHyperparams, TrainError};
use super::LinearModel;
use crate::corpus::{MetaLabel, SentenceRecord};
use crate::eval::metrics::{confusion, prf1};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error("sentence {0}#{1} has no meta label")]
    Unlabelled(String, usize),
    #[error("every grid combination failed: {0}")]
    AllFailed(String),
}

/// C values x class weights x iteration caps, in that nesting order.
pub fn default_grid() -> Vec<SvmHyperparams> {
    let mut grid = Vec::new();
    for c in [0.01, 0.1, 1.0, 10.0, 100.0] {
        for class_weight in [ClassWeight::Uniform, ClassWeight::Balanced] {
            for max_iterations in [1000, 10000] {
                grid.push(SvmHyperparams {
                    c,
                    class_weight,
                    max_iterations,
                    tolerance: 1e-4,
                });
            }
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub hyperparams: SvmHyperparams,
    /// Validation F1, or `None` when training failed.
    pub val_f1: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub model: LinearModel,
    pub chosen: SvmHyperparams,
    pub val_f1: f64,
    pub trials: Vec<Trial>,
}

/// Index of the winning trial: highest validation F1, then smaller C, then
/// earlier grid position.
pub fn select_best(trials: &[Trial]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in trials.iter().enumerate() {
        let Some(f1) = t.val_f1 else { continue };
        let better = match best {
            None => true,
            Some((j, best_f1)) => f1 > best_f1 || (f1 == best_f1 && t.hyperparams.c < trials[j].hyperparams.c),
        };
        if better {
            best = Some((i, f1));
        }
    }
    best.map(|(i, _)| i)
}

pub(crate) fn labels_of(records: &[SentenceRecord]) -> Result<Vec<MetaLabel>, GridError> {
    records
        .iter()
        .map(|s| {
            s.meta_label
                .ok_or_else(|| GridError::Unlabelled(s.doc_id.clone(), s.sent_index))
        })
        .collect()
}

fn validation_f1(svm: &LinearSvm, x: &[SparseVector], gold: &[MetaLabel]) -> f64 {
    if gold.is_empty() {
        return 0.0;
    }
    let pred: Vec<MetaLabel> = x.iter().map(|v| svm.predict(v).0).collect();
    confusion(&pred, gold).map(|c| prf1(&c).f1).unwrap_or(0.0)
}

/// Fits the vocabulary on `train`, trains one model per grid entry
/// (concurrently) and returns the one with the best validation F1.
pub fn grid_search(
    train: &[SentenceRecord],
    validation: &[SentenceRecord],
    grid: &[SvmHyperparams],
    features: FeatureConfig,
) -> Result<GridSearchOutcome, GridError> {
    if grid.is_empty() {
        return Err(GridError::EmptyGrid);
    }
    let y_train = labels_of(train)?;
    let y_val = labels_of(validation)?;
    if validation.is_empty() {
        warn!("grid search without validation sentences: every combination scores F1 = 0");
    }
    let vocab = Vocabulary::fit(train.iter().map(|s| s.text.as_str()), features)?;
    let x_train: Vec<SparseVector> = train.par_iter().map(|s| vocab.vectorize(&s.text)).collect();
    let x_val: Vec<SparseVector> = validation.par_iter().map(|s| vocab.vectorize(&s.text)).collect();

    let results: Vec<Result<LinearSvm, TrainError>> = grid
        .par_iter()
        .map(|h| train_linear_svm(&x_train, &y_train, vocab.len(), h))
        .collect();

    let mut trials = Vec::with_capacity(grid.len());
    let mut models = Vec::with_capacity(grid.len());
    for (h, result) in grid.iter().zip(results) {
        match result {
            Ok(svm) => {
                trials.push(Trial {
                    hyperparams: *h,
                    val_f1: Some(validation_f1(&svm, &x_val, &y_val)),
                    error: None,
                });
                models.push(Some(svm));
            }
            Err(e) => {
                warn!("grid combination {h} failed: {e}");
                trials.push(Trial {
                    hyperparams: *h,
                    val_f1: None,
                    error: Some(e.to_string()),
                });
                models.push(None);
            }
        }
    }

    let Some(best) = select_best(&trials) else {
        let reasons: Vec<String> = trials.iter().filter_map(|t| t.error.clone()).collect();
        return Err(GridError::AllFailed(reasons.join("; ")));
    };
    let svm = models[best].take().expect("selected trial has a model");
    Ok(GridSearchOutcome {
        chosen: grid[best],
        val_f1: trials[best].val_f1.unwrap_or(0.0),
        model: LinearModel { vocabulary: vocab, svm },
        trials,
    })
}
