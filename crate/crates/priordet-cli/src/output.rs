//! Output directory handling: result files, the run manifest, and canonical
//! config hashing.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Collects emitted files and writes `manifest.json` at the end of a run.
pub struct OutputWriter {
    dir: PathBuf,
    outputs: Vec<String>,
    started_unix_ms: u128,
}

impl OutputWriter {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            started_unix_ms: unix_ms(),
        })
    }

    pub fn write_text(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Runtime(format!("serialization failed: {e}")))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Write `manifest.json` naming every emitted file. Timestamps live only
    /// here; all other outputs are deterministic given the config and seed.
    pub fn finish(mut self, config_hash: &str, master_seed: u64) -> Result<(), CliError> {
        self.outputs.push("manifest.json".into());
        let manifest = serde_json::json!({
            "tool_version": env!("CARGO_PKG_VERSION"),
            "config_hash": config_hash,
            "master_seed": master_seed,
            "started_unix_ms": self.started_unix_ms,
            "finished_unix_ms": unix_ms(),
            "outputs": self.outputs,
        });
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Runtime(format!("serialization failed: {e}")))?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// SHA-256 of the canonical JSON form of the effective config. serde_json
/// maps order keys alphabetically, so the hash is stable under key
/// reordering in the input file.
pub fn config_hash(effective: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(effective).expect("value serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
