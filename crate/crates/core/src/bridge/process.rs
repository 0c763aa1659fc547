//! Running external backends as child processes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use log::{debug, info};
use serde_json::Value;
use wait_timeout::ChildExt;

use super::protocol::{
    parse_predictions, write_job_manifest, write_labelled_file, write_predict_file, JobManifest, JobMode, Prediction,
    PROTOCOL_VERSION,
};
use super::{Backend, BackendRegistration, BridgeError, TrainedModel};
use crate::corpus::SentenceRecord;

const STDERR_TAIL: usize = 2000;

fn tail(text: &str) -> String {
    let text = text.trim();
    if text.len() <= STDERR_TAIL {
        return text.to_string();
    }
    let mut start = text.len() - STDERR_TAIL;
    while !text.is_char_boundary(start) {
        start += 1;
    }
    format!("...{}", &text[start..])
}

/// Launches `reg.command --manifest <manifest_path>` and waits for it.
///
/// Standard output and error go to `<mode>.stdout.log` / `<mode>.stderr.log`
/// next to the manifest. Succeeds when the process exits 0 and the manifest's
/// output file exists; returns that path.
pub fn invoke_backend(reg: &BackendRegistration, manifest_path: &Path) -> Result<PathBuf, BridgeError> {
    let job = JobManifest::read(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let (program, args) = reg
        .command
        .split_first()
        .ok_or_else(|| BridgeError::Config(format!("backend {} has an empty command", reg.backend_id)))?;
    let stdout_path = dir.join(format!("{}.stdout.log", job.mode));
    let stderr_path = dir.join(format!("{}.stderr.log", job.mode));
    let stdout = fs::File::create(&stdout_path).map_err(|e| BridgeError::io(&stdout_path, e))?;
    let stderr = fs::File::create(&stderr_path).map_err(|e| BridgeError::io(&stderr_path, e))?;

    let command_line = format!("{} --manifest {}", reg.command.join(" "), manifest_path.display());
    debug!("launching {command_line}");
    let mut child = Command::new(program)
        .args(args)
        .arg("--manifest")
        .arg(manifest_path)
        .envs(&reg.env)
        .stdin(Stdio::null())
        .stdout(stdout)
        .stderr(stderr)
        .spawn()
        .map_err(|e| BridgeError::Launch {
            backend: reg.backend_id.clone(),
            command: command_line.clone(),
            source: e,
        })?;

    let status = match child
        .wait_timeout(Duration::from_secs(reg.timeout_secs))
        .map_err(|e| BridgeError::io(manifest_path, e))?
    {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(BridgeError::Timeout {
                backend: reg.backend_id.clone(),
                secs: reg.timeout_secs,
            });
        }
    };
    if !status.success() {
        let stderr = fs::read_to_string(&stderr_path).unwrap_or_default();
        return Err(BridgeError::Failed {
            backend: reg.backend_id.clone(),
            status: status.to_string(),
            stderr: tail(&stderr),
        });
    }
    if !job.output_path.exists() {
        return Err(BridgeError::Protocol(format!(
            "backend {} exited 0 without writing {}",
            reg.backend_id,
            job.output_path.display()
        )));
    }
    Ok(job.output_path)
}

/// A backend living in its own process, spoken to through job directories.
pub struct ProcessBackend {
    reg: BackendRegistration,
}

impl ProcessBackend {
    pub fn new(reg: BackendRegistration) -> Self {
        ProcessBackend { reg }
    }

    pub fn registration(&self) -> &BackendRegistration {
        &self.reg
    }
}

fn absolute(path: &Path) -> Result<PathBuf, BridgeError> {
    std::path::absolute(path).map_err(|e| BridgeError::io(path, e))
}

impl Backend for ProcessBackend {
    fn id(&self) -> &str {
        &self.reg.backend_id
    }

    fn train(
        &self,
        train: &[SentenceRecord],
        validation: &[SentenceRecord],
        workdir: &Path,
    ) -> Result<Box<dyn TrainedModel>, BridgeError> {
        let workdir = absolute(workdir)?;
        let train_path = workdir.join("train.jsonl");
        let validation_path = workdir.join("validation.jsonl");
        write_labelled_file(&train_path, train)?;
        write_labelled_file(&validation_path, validation)?;
        let job = JobManifest {
            job_id: format!("{}-train", self.reg.backend_id),
            mode: JobMode::Train,
            protocol_version: PROTOCOL_VERSION,
            train_path: Some(train_path),
            validation_path: Some(validation_path),
            predict_path: None,
            output_path: workdir.join("train_summary.json"),
            model_path: workdir.join("model"),
            config: self.reg.config.clone(),
        };
        let manifest = write_job_manifest(&job, &workdir)?;
        let out = invoke_backend(&self.reg, &manifest)?;
        let text = fs::read_to_string(&out).map_err(|e| BridgeError::io(&out, e))?;
        let summary: Value = serde_json::from_str(&text)
            .map_err(|e| BridgeError::Protocol(format!("training summary {}: {e}", out.display())))?;
        info!("backend {} trained in {}", self.reg.backend_id, workdir.display());
        Ok(Box::new(ProcessModel {
            reg: self.reg.clone(),
            model_path: job.model_path,
            summary,
        }))
    }
}

struct ProcessModel {
    reg: BackendRegistration,
    model_path: PathBuf,
    summary: Value,
}

impl TrainedModel for ProcessModel {
    fn predict(&self, sentences: &[SentenceRecord], workdir: &Path) -> Result<Vec<Prediction>, BridgeError> {
        let workdir = absolute(workdir)?;
        let predict_path = workdir.join("predict.jsonl");
        write_predict_file(&predict_path, sentences)?;
        let job = JobManifest {
            job_id: format!("{}-predict", self.reg.backend_id),
            mode: JobMode::Predict,
            protocol_version: PROTOCOL_VERSION,
            train_path: None,
            validation_path: None,
            predict_path: Some(predict_path),
            output_path: workdir.join("predictions.jsonl"),
            model_path: self.model_path.clone(),
            config: self.reg.config.clone(),
        };
        let manifest = write_job_manifest(&job, &workdir)?;
        let out = invoke_backend(&self.reg, &manifest)?;
        let requested: Vec<(String, usize)> = sentences.iter().map(|s| (s.doc_id.clone(), s.sent_index)).collect();
        parse_predictions(&out, &requested)
    }

    fn summary(&self) -> Value {
        self.summary.clone()
    }

    fn artifact(&self) -> Option<PathBuf> {
        Some(self.model_path.clone())
    }
}
