//! Scoring, training pools, the transfer matrix and its reports.

pub mod matrix;
pub mod metrics;
pub mod pools;
pub mod report;

pub use matrix::{
    run_transfer_matrix, Cell, MatrixConfig, MatrixError, ModelRecord, RunMetadata, ScoredPrediction, TransferMatrix,
    METRICS_FILE,
};
pub use metrics::{confusion, f1_score, prf1, ConfusionCounts, Metrics, MetricsError};
pub use pools::{enumerate_pools, Pool, PoolError};
pub use report::{format_score, render_report, ReportFormat, CSV_HEADER};
