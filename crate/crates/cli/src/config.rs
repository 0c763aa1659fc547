//! The run configuration: one TOML file, overridden by `ROLEBENCH_*`
//! environment variables and then by command-line flags.

use std::collections::BTreeMap;
use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rolebench_core::bridge::BackendSpec;
use rolebench_core::split::{SplitRatios, DEFAULT_SEED};
use rolebench_core::svm::SvmConfig;
use rolebench_core::DatasetId;

pub const CONFIG_VERSION: u32 = 1;
pub const SNAPSHOT_FILE: &str = "config.toml";

type Result<T> = std::result::Result<T, Box<dyn Error + Send + Sync>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: String,
    /// Datasets to evaluate; every dataset with a path when empty.
    pub datasets: Vec<DatasetId>,
    pub parallelism: usize,
    pub out: PathBuf,
    /// Label mapping file; the shipped mapping when unset.
    pub mapping: Option<PathBuf>,
    pub ratios: SplitRatios,
    /// Corpus location per dataset id: a raw dataset directory or an
    /// interchange `.jsonl` file.
    pub paths: BTreeMap<String, PathBuf>,
    pub svm: SvmConfig,
    pub backends: Vec<BackendSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            seed: DEFAULT_SEED.to_string(),
            datasets: Vec::new(),
            parallelism: 1,
            out: PathBuf::from("runs/latest"),
            mapping: None,
            ratios: SplitRatios::default(),
            paths: BTreeMap::new(),
            svm: SvmConfig::default(),
            backends: Vec::new(),
        }
    }
}

/// Values that may override the file; `None` leaves the file's value.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<String>,
    pub datasets: Option<String>,
    pub backends: Option<String>,
    pub parallelism: Option<usize>,
    pub out: Option<PathBuf>,
}

fn absolutize(base: &Path, p: &Path) -> Result<PathBuf> {
    let joined = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    Ok(std::path::absolute(joined)?)
}

pub fn parse_dataset_list(s: &str) -> Result<Vec<DatasetId>> {
    let mut out = Vec::new();
    for part in s.split([',', '+', ' ']).filter(|p| !p.is_empty()) {
        let d: DatasetId = part.parse()?;
        if !out.contains(&d) {
            out.push(d);
        }
    }
    if out.is_empty() {
        return Err("empty dataset list".into());
    }
    out.sort();
    Ok(out)
}

impl RunConfig {
    /// Reads `path`; relative paths inside are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| format!("config {}: {}", path.display(), e.message()))?;
        if config.version != CONFIG_VERSION {
            return Err(format!("config {}: unsupported version {}", path.display(), config.version).into());
        }
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        config.resolve_paths(base)?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) -> Result<()> {
        for p in self.paths.values_mut() {
            *p = absolutize(base, p)?;
        }
        if let Some(m) = &mut self.mapping {
            *m = absolutize(base, m)?;
        }
        self.out = absolutize(base, &self.out)?;
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = &o.seed {
            self.seed = seed.clone();
        }
        if let Some(list) = &o.datasets {
            self.datasets = parse_dataset_list(list)?;
        }
        if let Some(list) = &o.backends {
            let wanted: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            let mut chosen = Vec::new();
            for id in wanted {
                let spec = match self.backends.iter().find(|b| b.backend_id() == id) {
                    Some(b) => b.clone(),
                    None => builtin_backend(id).ok_or_else(|| format!("unknown backend `{id}`"))?,
                };
                chosen.push(spec);
            }
            self.backends = chosen;
        }
        if let Some(n) = o.parallelism {
            self.parallelism = n;
        }
        if let Some(out) = &o.out {
            self.out = std::path::absolute(out)?;
        }
        Ok(())
    }

    /// Dataset ids in play with their corpus paths.
    pub fn dataset_paths(&self) -> Result<Vec<(DatasetId, PathBuf)>> {
        let mut by_id = BTreeMap::new();
        for (k, p) in &self.paths {
            let d: DatasetId = k.parse()?;
            by_id.insert(d, p.clone());
        }
        let wanted: Vec<DatasetId> = if self.datasets.is_empty() {
            by_id.keys().copied().collect()
        } else {
            self.datasets.clone()
        };
        if wanted.is_empty() {
            return Err("no datasets configured: set [paths]".into());
        }
        wanted
            .into_iter()
            .map(|d| {
                by_id
                    .get(&d)
                    .map(|p| (d, p.clone()))
                    .ok_or_else(|| format!("no path configured for dataset {d}").into())
            })
            .collect()
    }

    pub fn backend_specs(&self) -> Vec<BackendSpec> {
        if self.backends.is_empty() {
            vec![builtin_backend("svm").expect("svm is built in")]
        } else {
            self.backends.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ratios.validate()?;
        if self.parallelism == 0 {
            return Err("parallelism must be at least 1".into());
        }
        if self.svm.grid.is_empty() {
            return Err("svm.grid is empty".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

pub fn builtin_backend(id: &str) -> Option<BackendSpec> {
    match id {
        "svm" => Some(BackendSpec::Svm { backend_id: id.into() }),
        "majority" => Some(BackendSpec::Majority { backend_id: id.into() }),
        _ => None,
    }
}
