//! The per-run provenance record. Every command writes exactly one manifest
//! next to its outputs; it is the only artifact whose bytes may differ
//! between otherwise identical runs (it records wall-clock duration).

use anyhow::Context;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub threads: usize,
    /// Resolved settings after defaults and config files were applied.
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
    #[serde(skip)]
    started: Instant,
}

impl RunManifest {
    pub fn new(command: &str, threads: usize) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            threads,
            config: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            duration_seconds: 0.0,
            started: Instant::now(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    pub fn set_all(&mut self, entries: &BTreeMap<String, String>) {
        for (k, v) in entries {
            self.config.insert(k.clone(), v.clone());
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Stamps the duration and writes the manifest atomically.
    pub fn write(mut self, path: &Path) -> anyhow::Result<()> {
        self.duration_seconds = self.started.elapsed().as_secs_f64();
        let mut text = serde_json::to_string_pretty(&self).context("serialize manifest")?;
        text.push('\n');
        eed_core::data::atomic_write(path, text.as_bytes())
            .with_context(|| format!("write manifest {}", path.display()))
    }
}

/// Manifest path for a command whose output is a single file: the file name
/// with `.manifest.json` appended, so sibling artifacts never collide.
pub fn sibling_manifest_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_else(|| "out".into());
    name.push(".manifest.json");
    out.with_file_name(name)
}
