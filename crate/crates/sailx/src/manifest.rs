//! Run manifests: enough to replay a command and find its outputs.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::formats::FormatError;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector, program name excluded.
    pub args: Vec<String>,
    /// Resolved settings of the run.
    pub config: serde_json::Value,
    pub seed: u64,
    pub artifacts: Vec<PathBuf>,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub version: String,
}

pub fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl RunManifest {
    pub fn start(command: &str, args: Vec<String>, seed: u64) -> Self {
        RunManifest {
            command: command.into(),
            args,
            config: serde_json::Value::Null,
            seed,
            artifacts: Vec::new(),
            started: now(),
            finished: 0.0,
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    /// Path of the manifest that belongs to `artifact`.
    pub fn path_for(artifact: &Path) -> PathBuf {
        let mut name = artifact.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        artifact.with_file_name(name)
    }

    pub fn finish_and_write(mut self, path: &Path) -> Result<(), FormatError> {
        self.finished = now();
        let text = serde_json::to_string_pretty(&self).expect("manifest JSON is always serializable");
        std::fs::write(path, text + "\n").map_err(|e| FormatError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| FormatError::Invalid(format!("{}: {e}", path.display())))
    }
}
