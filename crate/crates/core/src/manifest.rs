//! Experiment manifest: one JSON file per output directory, written before a
//! run starts and rewritten when it ends.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::constants::text_hash;
use crate::error::{Error, Result};

pub const FILE_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Subcommand name.
    pub command: String,
    /// Canonical config text the run used.
    pub config: String,
    /// Extra command arguments that change outputs (e.g. `n_max`).
    #[serde(default)]
    pub arguments: Vec<(String, String)>,
    pub constants_sha256: String,
    /// `embedded` or the path named by the override variable.
    pub constants_source: String,
    pub seed: u64,
    pub threads: usize,
    pub outputs: Vec<OutputRecord>,
    pub started_unix: f64,
    pub finished_unix: Option<f64>,
    /// `running`, `pass`, `falsified`, `error` or `blowup`.
    pub status: String,
    pub exit_code: Option<i32>,
    #[serde(default)]
    pub message: String,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

impl Manifest {
    pub fn start(
        command: &str,
        config: &str,
        constants_text: &str,
        constants_source: &str,
        seed: u64,
        threads: usize,
    ) -> Self {
        Self {
            tool: "sqg".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.into(),
            arguments: Vec::new(),
            constants_sha256: text_hash(constants_text),
            constants_source: constants_source.into(),
            seed,
            threads,
            outputs: Vec::new(),
            started_unix: unix_now(),
            finished_unix: None,
            status: "running".into(),
            exit_code: None,
            message: String::new(),
        }
    }

    pub fn record_output(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.push(OutputRecord {
            name: name.into(),
            sha256: crate::constants::bytes_hash(bytes),
            bytes: bytes.len(),
        });
    }

    pub fn finish(&mut self, status: &str, exit_code: i32, message: impl Into<String>) {
        self.status = status.into();
        self.exit_code = Some(exit_code);
        self.finished_unix = Some(unix_now());
        self.message = message.into();
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(FILE_NAME), self.to_json())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", e.line()),
        })
    }

    pub fn argument(&self, key: &str) -> Option<&str> {
        self.arguments.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}
