//! Binary confusion counts and precision / recall / F1 with Facts as the
//! positive class.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::MetaLabel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("prediction and gold lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("cannot score an empty prediction list")]
    Empty,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub n_sentences: usize,
}

impl ConfusionCounts {
    pub fn record(&mut self, predicted: MetaLabel, gold: MetaLabel) {
        match (predicted.is_positive(), gold.is_positive()) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
        self.n_sentences += 1;
    }
}

pub fn confusion(pred: &[MetaLabel], gold: &[MetaLabel]) -> Result<ConfusionCounts, MetricsError> {
    if pred.len() != gold.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), gold.len()));
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut c = ConfusionCounts::default();
    for (p, g) in pred.iter().zip(gold) {
        c.record(*p, *g);
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Zero denominators yield zero.
pub fn prf1(c: &ConfusionCounts) -> Metrics {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics { precision, recall, f1 }
}

/// F1 of a prediction list in one call.
pub fn f1_score(pred: &[MetaLabel], gold: &[MetaLabel]) -> Result<f64, MetricsError> {
    Ok(prf1(&confusion(pred, gold)?).f1)
}
