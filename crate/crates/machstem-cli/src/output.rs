//! Artifact writing: atomic file creation, CSV and JSON helpers, raw
//! little-endian float64 field dumps, and the per-run manifest.

use machstem::fields::{PeriodicField, PulseField};
use machstem::{MachStemError, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::RunConfig;

/// Collects every artifact of one run and finishes with a manifest recording
/// the configuration hash, versions and wall time. All files are written
/// atomically (temporary file + rename) into the output directory.
pub struct RunWriter {
    dir: PathBuf,
    artifacts: Vec<String>,
    start: Instant,
    config_hash: String,
    seed: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_sha256: &'a str,
    toolkit_version: &'a str,
    seed: u64,
    wall_time_seconds: f64,
    artifacts: &'a [String],
}

fn atomic_write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

impl RunWriter {
    pub fn new(dir: &Path, config: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let canonical = serde_json::to_string_pretty(config)
            .map_err(|e| MachStemError::Internal(format!("config serialization: {e}")))?;
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let config_hash = hasher
            .finalize()
            .iter()
            .fold(String::with_capacity(64), |s, b| s + &format!("{b:02x}"));
        let mut writer = Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
            start: Instant::now(),
            config_hash,
            seed: config.seed,
        };
        // The resolved configuration (defaults filled) travels with the run.
        writer.write_bytes("config.json", format!("{canonical}\n").as_bytes())?;
        Ok(writer)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        atomic_write(&self.dir, name, bytes)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| MachStemError::Internal(format!("{name}: {e}")))?;
        self.write_bytes(name, format!("{text}\n").as_bytes())
    }

    /// CSV with a header row; values in Rust's shortest round-trip float
    /// format, so identical runs are byte-identical.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            let line: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            text.push_str(&line.join(","));
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes())
    }

    fn write_f64(&mut self, name: &str, values: impl Iterator<Item = f64>) -> Result<()> {
        let mut bytes = Vec::new();
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        self.write_bytes(name, &bytes)
    }

    /// One binary snapshot of a periodic multi-node state: real samples on
    /// the uniform theta grid, y node index outermost.
    pub fn write_periodic_snapshot(
        &mut self,
        name: &str,
        state: &[PeriodicField],
        samples: usize,
    ) -> Result<()> {
        self.write_f64(name, state.iter().flat_map(|f| f.values(samples)))
    }

    pub fn write_pulse_snapshot(&mut self, name: &str, state: &PulseField) -> Result<()> {
        self.write_f64(name, state.values().iter().copied())
    }

    /// Write `manifest.json` and consume the writer. `manifest.json` itself
    /// carries the wall time and is the one artifact that is not
    /// byte-reproducible.
    pub fn finish(mut self, command: &str) -> Result<()> {
        self.artifacts.sort();
        let manifest = Manifest {
            command,
            config_sha256: &self.config_hash,
            toolkit_version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            wall_time_seconds: self.start.elapsed().as_secs_f64(),
            artifacts: &self.artifacts,
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| MachStemError::Internal(format!("manifest: {e}")))?;
        atomic_write(&self.dir, "manifest.json", format!("{text}\n").as_bytes())
    }
}

/// Grid metadata of one family of binary field files.
#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridMeta {
    Periodic { period: f64, kmax: usize, samples: usize, y_nodes: usize },
    Pulse { half_width: f64, step: f64, len: usize },
}

/// Manifest entry shared by all binary dumps: dtype, endianness, layout.
#[derive(Serialize)]
pub struct FieldManifest {
    pub dtype: &'static str,
    pub endianness: &'static str,
    pub grid: GridMeta,
    pub snapshots: Vec<SnapshotEntry>,
}

#[derive(Serialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub t: f64,
}
