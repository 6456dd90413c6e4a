//! Run manifest written next to every output file.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Serialize;

/// `git describe` of the source tree at build time, or "unknown".
pub const BUILD_ID: &str = env!("FSCNS_BUILD_ID");

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub build: String,
    pub version: String,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub wall_seconds: f64,
    pub aborted: usize,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn start(command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        let now = Utc::now();
        Self {
            command: command.to_string(),
            args: std::env::args().collect(),
            config,
            seed,
            build: BUILD_ID.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started: now,
            finished: now,
            wall_seconds: 0.0,
            aborted: 0,
            outputs: Vec::new(),
        }
    }

    pub fn finish(&mut self, aborted: usize, outputs: Vec<PathBuf>) {
        self.finished = Utc::now();
        self.wall_seconds = (self.finished - self.started).num_milliseconds() as f64 / 1000.0;
        self.aborted = aborted;
        self.outputs = outputs;
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// `out.csv` → `out.csv.manifest.json`
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}
