//! Run manifests: every command that writes artifacts also writes a
//! manifest recording the resolved parameters, input file digests, the
//! artifact version, and the seed. Two runs with equal manifests produce
//! byte-identical outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    command: String,
    artifact_version: String,
    seed: u64,
    parameters: BTreeMap<String, serde_json::Value>,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            parameters: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(
            key.to_string(),
            serde_json::to_value(value).expect("parameter serializes"),
        );
    }

    /// Record an input file by name with its SHA-256 digest.
    pub fn input(&mut self, name: &str, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::data(format!("failed to read {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.insert(name.to_string(), hex);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Write `<anchor>.manifest.json` next to the anchor output path.
    pub fn write_beside(&self, anchor: &Path) -> Result<(), CliError> {
        let path = manifest_path(anchor);
        let json = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        fs::write(&path, json)
            .map_err(|e| CliError::data(format!("failed to write {}: {e}", path.display())))?;
        Ok(())
    }
}

pub fn manifest_path(anchor: &Path) -> std::path::PathBuf {
    let mut name = anchor.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    anchor.with_file_name(name)
}
