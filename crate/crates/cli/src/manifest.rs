//! Run manifests: what was run, on which inputs, and what it produced.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Command;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

/// Effective simulation settings of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// The command with input paths made absolute.
    pub command: Command,
    pub inputs: Vec<FileHash>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    pub out_dir: PathBuf,
    /// Output files, relative to `out_dir`.
    pub outputs: Vec<FileHash>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<FileHash> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileHash { path: path.to_owned(), sha256: sha256_hex(&bytes) })
}

/// Inputs whose current content no longer matches the recorded hash.
pub fn changed_inputs(manifest: &RunManifest) -> Result<Vec<PathBuf>> {
    let mut changed = Vec::new();
    for input in &manifest.inputs {
        if hash_file(&input.path)?.sha256 != input.sha256 {
            changed.push(input.path.clone());
        }
    }
    Ok(changed)
}
