//! Run manifests: the fully resolved command plus digests of every file
//! it wrote. Re-running from a manifest reproduces the outputs
//! byte-for-byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::ResolvedCommand;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub master_seed: u64,
    /// The full resolved configuration, self-contained (no file references).
    pub command: ResolvedCommand,
    /// file name → SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

/// Write every produced file plus the manifest describing them.
pub fn write_outputs(
    out_dir: &Path,
    master_seed: u64,
    command: ResolvedCommand,
    outputs: &BTreeMap<String, Vec<u8>>,
) -> Result<RunManifest> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let mut digests = BTreeMap::new();
    for (name, bytes) in outputs {
        let path = out_dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        digests.insert(name.clone(), sha256_hex(bytes));
    }
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed,
        command,
        outputs: digests,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let body = serde_json::to_vec_pretty(&manifest)?;
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}

pub fn load(path: &Path) -> Result<RunManifest> {
    let body = fs::read_to_string(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    serde_json::from_str(&body).with_context(|| format!("parsing manifest {}", path.display()))
}
