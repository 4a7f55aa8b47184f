//! Run manifests written next to every command's outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    /// SHA-256 of `"blob <len>\0"` followed by the file contents.
    pub hash: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StageTiming {
    pub stage: String,
    pub ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset_checksum: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub artifacts: Vec<Artifact>,
    pub timings: Vec<StageTiming>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn collect(path: &Path, out: &mut Vec<Artifact>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| CliError::io(path, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| CliError::io(path, err)))
            .collect::<Result<_>>()?;
        entries.sort();
        for e in entries {
            collect(&e, out)?;
        }
    } else {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        out.push(Artifact {
            path: path.display().to_string(),
            bytes: bytes.len() as u64,
            hash: blob_hash(&bytes),
        });
    }
    Ok(())
}

/// `dir/name.json` → `dir/name.manifest.json`; `dir/out/` → `dir/out.manifest.json`.
pub fn manifest_path(primary: &Path) -> PathBuf {
    let stem = primary
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let parent = primary.parent().unwrap_or(Path::new(""));
    parent.join(format!("{stem}.manifest.json"))
}

/// Accumulates timings and artifacts while a command runs.
pub struct Recorder {
    manifest: RunManifest,
    stage_start: Option<(String, Instant)>,
}

impl Recorder {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Recorder {
            manifest: RunManifest {
                command: command.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config,
                dataset: None,
                dataset_checksum: None,
                seed: None,
                artifacts: Vec::new(),
                timings: Vec::new(),
                summary: serde_json::Value::Null,
            },
            stage_start: None,
        }
    }

    pub fn dataset(&mut self, dir: &Path) -> Result<()> {
        self.manifest.dataset = Some(dir.display().to_string());
        self.manifest.dataset_checksum = Some(hetrolat::dataset::dataset_checksum(dir)?);
        Ok(())
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn summary(&mut self, key: &str, value: impl Serialize) {
        if self.manifest.summary.is_null() {
            self.manifest.summary = serde_json::json!({});
        }
        let v = serde_json::to_value(value).expect("summary serializes");
        self.manifest.summary[key] = v;
    }

    /// Closes the running stage, if any, and opens `name`.
    pub fn stage(&mut self, name: &str) {
        self.finish_stage();
        self.stage_start = Some((name.to_string(), Instant::now()));
    }

    fn finish_stage(&mut self) {
        if let Some((name, t)) = self.stage_start.take() {
            self.manifest.timings.push(StageTiming {
                stage: name,
                ms: t.elapsed().as_secs_f64() * 1e3,
            });
        }
    }

    pub fn artifact(&mut self, path: &Path) -> Result<()> {
        collect(path, &mut self.manifest.artifacts)
    }

    pub fn write(mut self, path: &Path) -> Result<RunManifest> {
        self.finish_stage();
        write_json(path, &self.manifest)?;
        Ok(self.manifest)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let mut body = serde_json::to_string_pretty(value).map_err(|e| CliError::json(path, e))?;
    body.push('\n');
    fs::write(path, body).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::json(path, e))
}
