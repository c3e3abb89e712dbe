//! Run manifest and an output directory that records what it writes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Hex SHA-256 of the effective configuration.
    pub config_digest: String,
    pub seed: u64,
    /// Phase name to wall-clock milliseconds.
    pub timings: BTreeMap<String, u64>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config_text: &str, seed: u64) -> Self {
        RunManifest {
            command: command.into(),
            config_digest: hex::encode(Sha256::digest(config_text.as_bytes())),
            seed,
            ..RunManifest::default()
        }
    }

    pub fn with_digest(command: &str, digest: [u8; 32], seed: u64) -> Self {
        RunManifest { command: command.into(), config_digest: hex::encode(digest), seed, ..RunManifest::default() }
    }

    /// Run `f`, recording its wall time under `phase`.
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *self.timings.entry(phase.into()).or_default() += t.elapsed().as_millis() as u64;
        out
    }
}

/// Writes artifacts under one directory and lists each in the manifest.
pub struct OutDir {
    root: PathBuf,
    pub manifest: RunManifest,
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>, manifest: RunManifest) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|source| CliError::Output { path: root.clone(), source })?;
        Ok(OutDir { root, manifest })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Output { path: path.clone(), source })?;
        self.manifest.outputs.push(path.clone());
        Ok(path)
    }

    /// Write `manifest.json` and return its path.
    pub fn finish(self) -> Result<PathBuf> {
        let path = self.root.join("manifest.json");
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(&path, json + "\n").map_err(|source| CliError::Output { path: path.clone(), source })?;
        Ok(path)
    }
}
