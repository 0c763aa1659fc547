//! File formats of the backend job protocol.
//!
//! A job is a directory holding a TOML manifest plus JSON Lines data files.
//! Train and validation files use the corpus interchange format with gold
//! labels. Predict files carry only `dataset`, `doc_id`, `sent_index` and
//! `text`: no label of any kind reaches a backend at prediction time.
//! Backends answer predict jobs with one JSON object per sentence:
//! `{"doc_id", "sent_index", "predicted", "score"}`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BridgeError;
use crate::corpus::{read_records, write_records, DatasetId, MetaLabel, SentenceRecord};

pub const PROTOCOL_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobMode {
    Train,
    Predict,
}

impl fmt::Display for JobMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JobMode::Train => "train",
            JobMode::Predict => "predict",
        })
    }
}

/// Job description handed to a backend.
///
/// In train mode the backend reads `train_path` and `validation_path`, writes
/// its model to `model_path` and a JSON summary object to `output_path`. In
/// predict mode it loads `model_path`, reads `predict_path` and writes
/// predictions to `output_path`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobManifest {
    pub job_id: String,
    pub mode: JobMode,
    pub protocol_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predict_path: Option<PathBuf>,
    pub output_path: PathBuf,
    pub model_path: PathBuf,
    /// Backend-specific configuration, passed through untouched.
    #[serde(default)]
    pub config: String,
}

impl JobManifest {
    pub fn read(path: &Path) -> Result<Self, BridgeError> {
        let text = fs::read_to_string(path).map_err(|e| BridgeError::io(path, e))?;
        let manifest: JobManifest =
            toml::from_str(&text).map_err(|e| BridgeError::Protocol(format!("{}: {}", path.display(), e.message())))?;
        if manifest.protocol_version != PROTOCOL_VERSION {
            return Err(BridgeError::Protocol(format!(
                "unsupported protocol_version {}",
                manifest.protocol_version
            )));
        }
        Ok(manifest)
    }

    fn required_inputs(&self) -> Vec<(&'static str, Option<&PathBuf>)> {
        match self.mode {
            JobMode::Train => vec![
                ("train_path", self.train_path.as_ref()),
                ("validation_path", self.validation_path.as_ref()),
            ],
            JobMode::Predict => vec![
                ("predict_path", self.predict_path.as_ref()),
                ("model_path", Some(&self.model_path)),
            ],
        }
    }
}

/// Writes `job` as `dir/manifest.toml` after checking that every input the
/// mode needs exists.
pub fn write_job_manifest(job: &JobManifest, dir: &Path) -> Result<PathBuf, BridgeError> {
    for (key, path) in job.required_inputs() {
        match path {
            None => {
                return Err(BridgeError::Protocol(format!(
                    "{} job {} lacks {key}",
                    job.mode, job.job_id
                )))
            }
            Some(p) if !p.exists() => {
                return Err(BridgeError::MissingInput {
                    key,
                    path: p.display().to_string(),
                })
            }
            Some(_) => {}
        }
    }
    fs::create_dir_all(dir).map_err(|e| BridgeError::io(dir, e))?;
    let path = dir.join(MANIFEST_FILE);
    let text = toml::to_string(job).map_err(|e| BridgeError::Protocol(e.to_string()))?;
    fs::write(&path, text).map_err(|e| BridgeError::io(&path, e))?;
    Ok(path)
}

/// One sentence of a predict-mode data file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRow {
    pub dataset: DatasetId,
    pub doc_id: String,
    pub sent_index: usize,
    pub text: String,
}

impl From<&SentenceRecord> for PredictRow {
    fn from(s: &SentenceRecord) -> Self {
        PredictRow {
            dataset: s.dataset_id,
            doc_id: s.doc_id.clone(),
            sent_index: s.sent_index,
            text: s.text.clone(),
        }
    }
}

pub fn write_labelled_file(path: &Path, records: &[SentenceRecord]) -> Result<(), BridgeError> {
    if let Some(s) = records.iter().find(|s| s.meta_label.is_none()) {
        return Err(BridgeError::Protocol(format!(
            "training sentence {}#{} has no meta label",
            s.doc_id, s.sent_index
        )));
    }
    let file = fs::File::create(path).map_err(|e| BridgeError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_records(&mut out, records).map_err(|e| BridgeError::io(path, e))?;
    out.flush().map_err(|e| BridgeError::io(path, e))
}

pub fn read_labelled_file(path: &Path) -> Result<Vec<SentenceRecord>, BridgeError> {
    let file = fs::File::open(path).map_err(|e| BridgeError::io(path, e))?;
    read_records(BufReader::new(file), &path.display().to_string()).map_err(|e| BridgeError::Protocol(e.to_string()))
}

pub fn write_predict_file(path: &Path, records: &[SentenceRecord]) -> Result<(), BridgeError> {
    let file = fs::File::create(path).map_err(|e| BridgeError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for s in records {
        serde_json::to_writer(&mut out, &PredictRow::from(s)).map_err(|e| BridgeError::Protocol(e.to_string()))?;
        out.write_all(b"\n").map_err(|e| BridgeError::io(path, e))?;
    }
    out.flush().map_err(|e| BridgeError::io(path, e))
}

pub fn read_predict_file(path: &Path) -> Result<Vec<PredictRow>, BridgeError> {
    let file = fs::File::open(path).map_err(|e| BridgeError::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| BridgeError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(&line)
                .map_err(|e| BridgeError::Protocol(format!("{} line {}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    pub sent_index: usize,
    pub predicted: MetaLabel,
    #[serde(default)]
    pub score: f64,
}

pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<(), BridgeError> {
    let file = fs::File::create(path).map_err(|e| BridgeError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for p in predictions {
        serde_json::to_writer(&mut out, p).map_err(|e| BridgeError::Protocol(e.to_string()))?;
        out.write_all(b"\n").map_err(|e| BridgeError::io(path, e))?;
    }
    out.flush().map_err(|e| BridgeError::io(path, e))
}

/// Parses a prediction file and checks it covers exactly the `requested`
/// sentences, each once. The result follows the order of `requested`.
pub fn parse_predictions(path: &Path, requested: &[(String, usize)]) -> Result<Vec<Prediction>, BridgeError> {
    let file = fs::File::open(path).map_err(|e| BridgeError::io(path, e))?;
    let wanted: HashMap<(&str, usize), usize> = requested
        .iter()
        .enumerate()
        .map(|(i, (d, s))| ((d.as_str(), *s), i))
        .collect();
    let mut slots: Vec<Option<Prediction>> = vec![None; requested.len()];
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| BridgeError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(&line)
            .map_err(|e| BridgeError::Protocol(format!("{} line {}: {e}", path.display(), i + 1)))?;
        if !p.score.is_finite() {
            return Err(BridgeError::Protocol(format!(
                "non-finite score for ({}, {})",
                p.doc_id, p.sent_index
            )));
        }
        let Some(&slot) = wanted.get(&(p.doc_id.as_str(), p.sent_index)) else {
            return Err(BridgeError::Protocol(format!(
                "prediction for unrequested sentence ({}, {})",
                p.doc_id, p.sent_index
            )));
        };
        if slots[slot].is_some() {
            return Err(BridgeError::Protocol(format!(
                "duplicate prediction for ({}, {})",
                p.doc_id, p.sent_index
            )));
        }
        slots[slot] = Some(p);
    }
    let missing: BTreeSet<String> = slots
        .iter()
        .zip(requested)
        .filter(|(s, _)| s.is_none())
        .map(|(_, (d, i))| format!("({d}, {i})"))
        .collect();
    if !missing.is_empty() {
        return Err(BridgeError::Protocol(format!(
            "missing predictions for {}",
            missing.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(slots.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn records(n: usize) -> Vec<SentenceRecord> {
        (0..n)
            .map(|i| SentenceRecord {
                dataset_id: DatasetId::Bva,
                doc_id: format!("d{}", i / 5),
                sent_index: i % 5,
                text: format!("Sentence number {i}."),
                source_label: "Evidence".into(),
                meta_label: Some(if i % 3 == 0 {
                    MetaLabel::Facts
                } else {
                    MetaLabel::NonFacts
                }),
            })
            .collect()
    }

    fn keys(recs: &[SentenceRecord]) -> Vec<(String, usize)> {
        recs.iter().map(|s| (s.doc_id.clone(), s.sent_index)).collect()
    }

    #[test]
    fn train_job_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = records(10);
        let (train, val) = data.split_at(6);
        let train_path = dir.path().join("train.jsonl");
        let val_path = dir.path().join("validation.jsonl");
        write_labelled_file(&train_path, train).unwrap();
        write_labelled_file(&val_path, val).unwrap();
        let job = JobManifest {
            job_id: "j1".into(),
            mode: JobMode::Train,
            protocol_version: PROTOCOL_VERSION,
            train_path: Some(train_path.clone()),
            validation_path: Some(val_path.clone()),
            predict_path: None,
            output_path: dir.path().join("summary.json"),
            model_path: dir.path().join("model"),
            config: "c = 1".into(),
        };
        let manifest = write_job_manifest(&job, dir.path()).unwrap();
        let text = fs::read_to_string(&manifest).unwrap();
        assert!(text.contains("protocol_version = 1"), "{text}");
        assert_eq!(JobManifest::read(&manifest).unwrap(), job);
        assert_eq!(read_labelled_file(&train_path).unwrap(), train);
        assert_eq!(read_labelled_file(&val_path).unwrap(), val);
    }

    #[test]
    fn predict_job_needs_its_input() {
        let dir = tempfile::tempdir().unwrap();
        let model = dir.path().join("model.json");
        fs::write(&model, "{}").unwrap();
        let job = JobManifest {
            job_id: "p".into(),
            mode: JobMode::Predict,
            protocol_version: PROTOCOL_VERSION,
            train_path: None,
            validation_path: None,
            predict_path: Some(dir.path().join("nope.jsonl")),
            output_path: dir.path().join("out.jsonl"),
            model_path: model,
            config: String::new(),
        };
        let err = write_job_manifest(&job, dir.path()).unwrap_err();
        assert!(
            matches!(
                err,
                BridgeError::MissingInput {
                    key: "predict_path",
                    ..
                }
            ),
            "{err}"
        );
        assert!(!dir.path().join(MANIFEST_FILE).exists());
    }

    #[test]
    fn predict_files_carry_no_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("predict.jsonl");
        write_predict_file(&path, &records(4)).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            let obj = v.as_object().unwrap();
            let mut fields: Vec<_> = obj.keys().map(String::as_str).collect();
            fields.sort();
            assert_eq!(fields, vec!["dataset", "doc_id", "sent_index", "text"]);
        }
        assert_eq!(read_predict_file(&path).unwrap().len(), 4);
    }

    #[test]
    fn prediction_coverage_rules() {
        let dir = tempfile::tempdir().unwrap();
        let recs = records(6);
        let wanted = keys(&recs);
        let path = dir.path().join("p.jsonl");
        let preds: Vec<Prediction> = recs
            .iter()
            .map(|s| Prediction {
                doc_id: s.doc_id.clone(),
                sent_index: s.sent_index,
                predicted: MetaLabel::Facts,
                score: 0.5,
            })
            .collect();
        write_predictions(&path, &preds).unwrap();
        assert_eq!(parse_predictions(&path, &wanted).unwrap().len(), 6);

        write_predictions(&path, &preds[..5]).unwrap();
        let err = parse_predictions(&path, &wanted).unwrap_err().to_string();
        assert!(err.contains("(d1, 0)"), "{err}");

        let mut dup = preds.clone();
        dup.push(preds[0].clone());
        write_predictions(&path, &dup).unwrap();
        assert!(parse_predictions(&path, &wanted)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));

        let mut stray = preds.clone();
        stray[2].sent_index = 99;
        write_predictions(&path, &stray).unwrap();
        assert!(parse_predictions(&path, &wanted)
            .unwrap_err()
            .to_string()
            .contains("unrequested"));
    }

    #[test]
    fn score_is_optional() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        fs::write(
            &path,
            "{\"doc_id\":\"a\",\"sent_index\":0,\"predicted\":\"NonFacts\"}\n",
        )
        .unwrap();
        let got = parse_predictions(&path, &[("a".into(), 0)]).unwrap();
        assert_eq!(got[0].score, 0.0);
        assert_eq!(got[0].predicted, MetaLabel::NonFacts);
        fs::write(&path, "{\"doc_id\":\"a\",\"sent_index\":0,\"predicted\":\"Maybe\"}\n").unwrap();
        assert!(matches!(
            parse_predictions(&path, &[("a".into(), 0)]),
            Err(BridgeError::Protocol(_))
        ));
    }

    proptest! {
        #[test]
        fn predictions_round_trip(rows in prop::collection::vec((0usize..50, any::<bool>(), -1e6f64..1e6), 0..40)) {
            let mut seen = BTreeSet::new();
            let preds: Vec<Prediction> = rows.into_iter()
                .filter(|(i, _, _)| seen.insert(*i))
                .map(|(i, f, score)| Prediction {
                    doc_id: format!("doc{}", i % 7),
                    sent_index: i,
                    predicted: if f { MetaLabel::Facts } else { MetaLabel::NonFacts },
                    score,
                })
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.jsonl");
            write_predictions(&path, &preds).unwrap();
            let wanted: Vec<(String, usize)> = preds.iter().map(|p| (p.doc_id.clone(), p.sent_index)).collect();
            prop_assert_eq!(parse_predictions(&path, &wanted).unwrap(), preds);
        }
    }
}
