use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::PipelineConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn file_digest(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub seconds: f64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub warnings: Vec<String>,
}

/// Collects the files a stage touched; digests are taken when the stage
/// finishes.
#[derive(Debug, Default)]
pub struct StageFiles {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl StageFiles {
    pub fn read(&mut self, p: impl Into<PathBuf>) -> PathBuf {
        let p = p.into();
        self.inputs.push(p.clone());
        p
    }

    pub fn wrote(&mut self, p: impl Into<PathBuf>) -> PathBuf {
        let p = p.into();
        self.outputs.push(p.clone());
        p
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        log::debug!("{w}");
        self.warnings.push(w);
    }

    pub fn into_record(self, name: &str, seconds: f64) -> Result<StageRecord> {
        let digest = |v: Vec<PathBuf>| -> Result<Vec<FileDigest>> {
            v.iter().map(|p| file_digest(p)).collect()
        };
        Ok(StageRecord {
            name: name.to_string(),
            seconds,
            inputs: digest(self.inputs)?,
            outputs: digest(self.outputs)?,
            warnings: self.warnings,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: PipelineConfig,
    pub stages: Vec<StageRecord>,
    /// `ok` or `failed`.
    pub status: String,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &PipelineConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            stages: Vec::new(),
            status: "ok".into(),
            error: None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &str> {
        self.stages.iter().flat_map(|s| s.warnings.iter().map(String::as_str))
    }
}
