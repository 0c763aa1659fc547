//! Runs every backend on every training pool and scores each trained model on
//! every dataset's test fold.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::metrics::{confusion, prf1, ConfusionCounts, Metrics};
use super::pools::{enumerate_pools, Pool, PoolError};
use crate::bridge::{Backend, BridgeError, Prediction};
use crate::corpus::{Corpus, DatasetId, MetaLabel, SentenceRecord};
use crate::split::{materialize_fold, Fold, SplitAssignment, SplitError, SplitRatios};

pub const METRICS_FILE: &str = "metrics.json";
pub const VALIDATION_POLICY: &str = "pooled";

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("no backends registered")]
    NoBackends,
    #[error("no corpora given")]
    NoCorpora,
    #[error("corpus {0} given twice")]
    DuplicateCorpus(DatasetId),
    #[error("duplicate backend id {0}")]
    DuplicateBackend(String),
    #[error("pool {0} uses a dataset without a corpus")]
    UnknownPoolMember(Pool),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
    #[error("bad metrics file {path}: {message}")]
    Format { path: String, message: String },
}

fn io_err(path: &Path, source: std::io::Error) -> MatrixError {
    MatrixError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct MatrixConfig {
    /// Maximum number of (backend, pool) jobs in flight.
    pub parallelism: usize,
    pub run_dir: PathBuf,
    /// Pools to train on; every non-empty subset of the corpora when unset.
    pub pools: Option<Vec<Pool>>,
}

impl MatrixConfig {
    pub fn new(run_dir: impl Into<PathBuf>) -> Self {
        MatrixConfig {
            parallelism: 1,
            run_dir: run_dir.into(),
            pools: None,
        }
    }
}

/// Outcome of one (backend, pool, target) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub backend: String,
    pub pool: Pool,
    pub target: DatasetId,
    pub in_domain: bool,
    pub confusion: Option<ConfusionCounts>,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
    /// Prediction file, relative to the run directory.
    pub predictions: Option<String>,
}

impl Cell {
    pub fn is_failed(&self) -> bool {
        self.metrics.is_none()
    }
}

/// What was trained for one (backend, pool) job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub backend: String,
    pub pool: Pool,
    pub n_train: usize,
    pub n_validation: usize,
    pub artifact: Option<String>,
    pub summary: Value,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: String,
    pub ratios: SplitRatios,
    pub validation_policy: String,
    pub backends: Vec<String>,
    pub pools: Vec<Pool>,
    pub targets: Vec<DatasetId>,
    pub started_at: String,
    pub finished_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub metadata: RunMetadata,
    pub cells: Vec<Cell>,
    pub models: Vec<ModelRecord>,
}

impl TransferMatrix {
    pub fn cell(&self, backend: &str, pool: &Pool, target: DatasetId) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.backend == backend && &c.pool == pool && c.target == target)
    }

    pub fn f1(&self, backend: &str, pool: &Pool, target: DatasetId) -> Option<f64> {
        self.cell(backend, pool, target).and_then(|c| c.metrics).map(|m| m.f1)
    }

    pub fn failed_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.is_failed())
    }

    pub fn is_complete(&self) -> bool {
        self.cells.len() == self.metadata.backends.len() * self.metadata.pools.len() * self.metadata.targets.len()
    }

    /// True when both runs produced bit-identical counts and scores in every
    /// cell, ignoring timestamps and paths.
    pub fn same_results(&self, other: &TransferMatrix) -> bool {
        let key = |c: &Cell| (c.backend.clone(), c.pool.clone(), c.target);
        let mine: BTreeMap<_, _> = self.cells.iter().map(|c| (key(c), c)).collect();
        let theirs: BTreeMap<_, _> = other.cells.iter().map(|c| (key(c), c)).collect();
        mine.len() == theirs.len()
            && mine.iter().all(|(k, a)| {
                theirs.get(k).is_some_and(|b| {
                    a.confusion == b.confusion
                        && match (a.metrics, b.metrics) {
                            (Some(x), Some(y)) => {
                                x.precision.to_bits() == y.precision.to_bits()
                                    && x.recall.to_bits() == y.recall.to_bits()
                                    && x.f1.to_bits() == y.f1.to_bits()
                            }
                            (None, None) => true,
                            _ => false,
                        }
                })
            })
    }

    pub fn write(&self, path: &Path) -> Result<(), MatrixError> {
        let text = serde_json::to_string_pretty(self).expect("matrix serializes");
        fs::write(path, text).map_err(|e| io_err(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, MatrixError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| MatrixError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Row of a persisted prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPrediction {
    pub dataset: DatasetId,
    pub doc_id: String,
    pub sent_index: usize,
    pub gold: MetaLabel,
    pub predicted: MetaLabel,
    pub score: f64,
}

struct Job<'a> {
    backend: &'a dyn Backend,
    pool: Pool,
}

struct JobOutput {
    model: ModelRecord,
    cells: Vec<(DatasetId, Result<Vec<Prediction>, String>)>,
}

fn pooled(
    corpora: &BTreeMap<DatasetId, &Corpus>,
    pool: &Pool,
    assignment: &SplitAssignment,
    fold: Fold,
) -> Result<Vec<SentenceRecord>, SplitError> {
    let mut out = Vec::new();
    for d in pool.members() {
        out.extend(materialize_fold(corpora[d], assignment, fold)?);
    }
    Ok(out)
}

fn relative(path: &Path, base: &Path) -> String {
    path.strip_prefix(base).unwrap_or(path).display().to_string()
}

fn run_job(
    job: &Job<'_>,
    corpora: &BTreeMap<DatasetId, &Corpus>,
    tests: &BTreeMap<DatasetId, Vec<SentenceRecord>>,
    assignment: &SplitAssignment,
    run_dir: &Path,
) -> Result<JobOutput, MatrixError> {
    let backend_id = job.backend.id().to_string();
    let train = pooled(corpora, &job.pool, assignment, Fold::Train)?;
    let validation = pooled(corpora, &job.pool, assignment, Fold::Validation)?;
    let workdir = run_dir.join("jobs").join(&backend_id).join(job.pool.name());
    let train_dir = workdir.join("train");
    fs::create_dir_all(&train_dir).map_err(|e| io_err(&train_dir, e))?;
    info!("training {backend_id} on {} ({} sentences)", job.pool, train.len());

    let mut record = ModelRecord {
        backend: backend_id.clone(),
        pool: job.pool.clone(),
        n_train: train.len(),
        n_validation: validation.len(),
        artifact: None,
        summary: Value::Null,
        error: None,
    };
    let model = match job.backend.train(&train, &validation, &train_dir) {
        Ok(m) => m,
        Err(e) => {
            warn!("{backend_id} failed to train on {}: {e}", job.pool);
            record.error = Some(e.to_string());
            let msg = format!("training failed: {e}");
            return Ok(JobOutput {
                model: record,
                cells: tests.keys().map(|t| (*t, Err(msg.clone()))).collect(),
            });
        }
    };
    record.artifact = model.artifact().map(|p| relative(&p, run_dir));
    record.summary = model.summary();

    let mut cells = Vec::with_capacity(tests.len());
    for (target, sentences) in tests {
        if sentences.is_empty() {
            cells.push((*target, Err(format!("{target} has an empty test fold"))));
            continue;
        }
        let dir = workdir.join(format!("predict-{target}"));
        let result = fs::create_dir_all(&dir)
            .map_err(|e| BridgeError::io(&dir, e))
            .and_then(|_| model.predict(sentences, &dir))
            .map_err(|e| e.to_string())
            .and_then(|preds| {
                if preds.len() != sentences.len()
                    || preds
                        .iter()
                        .zip(sentences)
                        .any(|(p, s)| p.doc_id != s.doc_id || p.sent_index != s.sent_index)
                {
                    Err("backend returned predictions out of order".to_string())
                } else {
                    Ok(preds)
                }
            });
        if let Err(e) = &result {
            warn!("{backend_id} trained on {} failed on {target}: {e}", job.pool);
        }
        cells.push((*target, result));
    }
    Ok(JobOutput { model: record, cells })
}

fn write_predictions(path: &Path, sentences: &[SentenceRecord], preds: &[Prediction]) -> Result<(), MatrixError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    for (s, p) in sentences.iter().zip(preds) {
        let row = ScoredPrediction {
            dataset: s.dataset_id,
            doc_id: s.doc_id.clone(),
            sent_index: s.sent_index,
            gold: s.meta_label.expect("test sentences are labelled"),
            predicted: p.predicted,
            score: p.score,
        };
        serde_json::to_writer(&mut out, &row).expect("row serializes");
        out.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

/// Trains each backend on each pool (train folds concatenated, validation
/// folds concatenated) and scores every target's test fold.
///
/// Backend failures mark the affected cells failed and the run continues.
/// Registry files are written from the calling thread only.
pub fn run_transfer_matrix(
    corpora: &[Corpus],
    assignment: &SplitAssignment,
    backends: &[Box<dyn Backend>],
    config: &MatrixConfig,
) -> Result<TransferMatrix, MatrixError> {
    let started_at = chrono::Utc::now().to_rfc3339();
    if backends.is_empty() {
        return Err(MatrixError::NoBackends);
    }
    if corpora.is_empty() {
        return Err(MatrixError::NoCorpora);
    }
    let mut by_id: BTreeMap<DatasetId, &Corpus> = BTreeMap::new();
    for c in corpora {
        if by_id.insert(c.dataset_id, c).is_some() {
            return Err(MatrixError::DuplicateCorpus(c.dataset_id));
        }
    }
    let mut ids = BTreeSet::new();
    for b in backends {
        if !ids.insert(b.id()) {
            return Err(MatrixError::DuplicateBackend(b.id().to_string()));
        }
    }
    let datasets: Vec<DatasetId> = by_id.keys().copied().collect();
    let pools = match &config.pools {
        Some(p) => {
            let mut p = p.clone();
            p.sort();
            p.dedup();
            p
        }
        None => enumerate_pools(&datasets)?,
    };
    if let Some(p) = pools
        .iter()
        .find(|p| p.members().iter().any(|d| !by_id.contains_key(d)))
    {
        return Err(MatrixError::UnknownPoolMember(p.clone()));
    }

    let mut tests = BTreeMap::new();
    for (d, c) in &by_id {
        let fold = materialize_fold(c, assignment, Fold::Test)?;
        if let Some(s) = fold.iter().find(|s| s.meta_label.is_none()) {
            return Err(MatrixError::Format {
                path: c.provenance.source.clone(),
                message: format!("sentence {}#{} has no meta label; recast first", s.doc_id, s.sent_index),
            });
        }
        tests.insert(*d, fold);
    }

    fs::create_dir_all(&config.run_dir).map_err(|e| io_err(&config.run_dir, e))?;
    let jobs: Vec<Job<'_>> = backends
        .iter()
        .flat_map(|b| {
            pools.iter().map(move |p| Job {
                backend: b.as_ref(),
                pool: p.clone(),
            })
        })
        .collect();
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .map_err(|e| MatrixError::ThreadPool(e.to_string()))?;
    let outputs: Vec<Result<JobOutput, MatrixError>> = threads.install(|| {
        jobs.par_iter()
            .map(|j| run_job(j, &by_id, &tests, assignment, &config.run_dir))
            .collect()
    });

    let mut cells = Vec::new();
    let mut models = Vec::new();
    for (job, output) in jobs.iter().zip(outputs) {
        let output = output?;
        for (target, result) in output.cells {
            let mut cell = Cell {
                backend: job.backend.id().to_string(),
                pool: job.pool.clone(),
                target,
                in_domain: job.pool.members() == [target],
                confusion: None,
                metrics: None,
                error: None,
                predictions: None,
            };
            match result {
                Ok(preds) => {
                    let gold: Vec<MetaLabel> = tests[&target].iter().map(|s| s.meta_label.expect("checked")).collect();
                    let pred: Vec<MetaLabel> = preds.iter().map(|p| p.predicted).collect();
                    match confusion(&pred, &gold) {
                        Ok(c) => {
                            let path = config
                                .run_dir
                                .join("predictions")
                                .join(&cell.backend)
                                .join(job.pool.name())
                                .join(format!("{target}.jsonl"));
                            write_predictions(&path, &tests[&target], &preds)?;
                            cell.predictions = Some(relative(&path, &config.run_dir));
                            cell.metrics = Some(prf1(&c));
                            cell.confusion = Some(c);
                        }
                        Err(e) => cell.error = Some(e.to_string()),
                    }
                }
                Err(e) => cell.error = Some(e),
            }
            cells.push(cell);
        }
        models.push(output.model);
    }

    let matrix = TransferMatrix {
        metadata: RunMetadata {
            seed: assignment.seed.clone(),
            ratios: assignment.ratios,
            validation_policy: VALIDATION_POLICY.to_string(),
            backends: backends.iter().map(|b| b.id().to_string()).collect(),
            pools,
            targets: datasets,
            started_at,
            finished_at: chrono::Utc::now().to_rfc3339(),
        },
        cells,
        models,
    };
    matrix.write(&config.run_dir.join(METRICS_FILE))?;
    let failed = matrix.failed_cells().count();
    if failed > 0 {
        warn!("{failed} of {} cells failed", matrix.cells.len());
    }
    Ok(matrix)
}
