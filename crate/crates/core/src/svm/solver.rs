//! L2-regularised hinge-loss linear SVM trained by dual coordinate descent.
//!
//! The bias is learned as the weight of an implicit constant feature equal to
//! 1, so it is regularised together with `w`. The primal problem is
//!
//! ```text
//! min  1/2 (|w|^2 + b^2) + C * sum_i cw(y_i) * max(0, 1 - y_i (w.x_i + b))
//! ```
//!
//! and the dual is solved one coordinate at a time in fixed cyclic order,
//! stopping when the projected-gradient spread drops below `tolerance` or
//! after `max_iterations` passes over the data.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::features::SparseVector;
use crate::corpus::MetaLabel;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("feature and label counts differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no training examples")]
    Empty,
    #[error("training data contains only {0} examples")]
    SingleClass(MetaLabel),
    #[error("invalid hyperparameters: {0}")]
    BadHyperparams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    Uniform,
    Balanced,
}

impl fmt::Display for ClassWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassWeight::Uniform => "uniform",
            ClassWeight::Balanced => "balanced",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmHyperparams {
    pub c: f64,
    pub class_weight: ClassWeight,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SvmHyperparams {
    fn default() -> Self {
        SvmHyperparams {
            c: 1.0,
            class_weight: ClassWeight::Uniform,
            max_iterations: 1000,
            tolerance: 1e-4,
        }
    }
}

impl SvmHyperparams {
    fn validate(&self) -> Result<(), TrainError> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(TrainError::BadHyperparams(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if self.max_iterations == 0 {
            return Err(TrainError::BadHyperparams("max_iterations must be positive".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(TrainError::BadHyperparams(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SvmHyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "C={} class_weight={} max_iter={} tol={}",
            self.c, self.class_weight, self.max_iterations, self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub iterations: usize,
    pub converged: bool,
    /// Primal objective at the returned solution.
    pub objective: f64,
    /// Dual objective (minimisation form) after each pass.
    pub dual_trace: Vec<f64>,
}

/// Weights and bias of a trained linear classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyperparams: SvmHyperparams,
    pub training: TrainingInfo,
}

impl LinearSvm {
    pub fn decision_value(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    /// Facts iff the margin is strictly positive.
    pub fn predict(&self, x: &SparseVector) -> (MetaLabel, f64) {
        let margin = self.decision_value(x);
        let label = if margin > 0.0 {
            MetaLabel::Facts
        } else {
            MetaLabel::NonFacts
        };
        (label, margin)
    }
}

/// Per-example cost weights `cw(y)`.
pub fn class_costs(y: &[MetaLabel], weight: ClassWeight) -> (f64, f64) {
    match weight {
        ClassWeight::Uniform => (1.0, 1.0),
        ClassWeight::Balanced => {
            let n = y.len() as f64;
            let pos = y.iter().filter(|l| l.is_positive()).count() as f64;
            let neg = n - pos;
            (n / (2.0 * pos), n / (2.0 * neg))
        }
    }
}

/// Primal objective of `(w, b)` on the given data.
pub fn primal_objective(x: &[SparseVector], y: &[MetaLabel], h: &SvmHyperparams, weights: &[f64], bias: f64) -> f64 {
    let (cw_pos, cw_neg) = class_costs(y, h.class_weight);
    let reg = 0.5 * (weights.iter().map(|w| w * w).sum::<f64>() + bias * bias);
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let cw = if yi.is_positive() { cw_pos } else { cw_neg };
            cw * (1.0 - yi.sign() * (xi.dot(weights) + bias)).max(0.0)
        })
        .sum();
    reg + h.c * loss
}

pub fn train_linear_svm(
    x: &[SparseVector],
    y: &[MetaLabel],
    n_features: usize,
    h: &SvmHyperparams,
) -> Result<LinearSvm, TrainError> {
    if x.len() != y.len() {
        return Err(TrainError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(TrainError::Empty);
    }
    h.validate()?;
    if y.iter().all(|l| *l == y[0]) {
        return Err(TrainError::SingleClass(y[0]));
    }
    let n_features = x
        .iter()
        .filter_map(|v| v.entries().last().map(|&(i, _)| i + 1))
        .max()
        .unwrap_or(0)
        .max(n_features);

    let (cw_pos, cw_neg) = class_costs(y, h.class_weight);
    let upper: Vec<f64> = y
        .iter()
        .map(|l| h.c * if l.is_positive() { cw_pos } else { cw_neg })
        .collect();
    let signs: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let q_diag: Vec<f64> = x.iter().map(|v| v.norm_sq() + 1.0).collect();

    let mut alpha = vec![0.0; x.len()];
    let mut w = vec![0.0; n_features];
    let mut b = 0.0;
    let mut dual_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < h.max_iterations {
        iterations += 1;
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for i in 0..x.len() {
            let yi = signs[i];
            let g = yi * (x[i].dot(&w) + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == upper[i] {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, upper[i]);
                let step = (alpha[i] - old) * yi;
                if step != 0.0 {
                    x[i].add_scaled_to(&mut w, step);
                    b += step;
                }
            }
        }
        let norm_sq = w.iter().map(|v| v * v).sum::<f64>() + b * b;
        dual_trace.push(0.5 * norm_sq - alpha.iter().sum::<f64>());
        if pg_max - pg_min <= h.tolerance {
            converged = true;
            break;
        }
    }

    let objective = primal_objective(x, y, h, &w, b);
    Ok(LinearSvm {
        weights: w,
        bias: b,
        hyperparams: *h,
        training: TrainingInfo {
            iterations,
            converged,
            objective,
            dual_trace,
        },
    })
}
