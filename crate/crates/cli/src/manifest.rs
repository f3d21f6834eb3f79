use std::fs;
use std::path::{Path, PathBuf};

use relnet_core::canon::{canonicalize, sha256_hex};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Relative to the manifest's directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmRecord {
    pub arm: String,
    pub replicate: usize,
    pub seed: u64,
    pub trace: String,
    pub losses: String,
    /// Intermediate checkpoints in training order, then the final model.
    pub checkpoints: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub status: String,
    pub experiment: String,
    /// Resolved config, every default materialized.
    pub config: Value,
    pub config_sha256: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub arms: Vec<ArmRecord>,
    pub summary: String,
    /// Deviations and scale notes that apply to this run.
    pub notes: Vec<String>,
    pub artifacts: Vec<ArtifactRecord>,
}

impl RunManifest {
    pub fn to_canonical(&self) -> String {
        canonicalize(&serde_json::to_value(self).expect("manifest serializes"))
    }

    pub fn is_complete(&self) -> bool {
        self.status == "complete"
    }

    /// Every listed artifact exists and matches its checksum.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for a in &self.artifacts {
            let path = dir.join(&a.path);
            let bytes = match fs::read(&path) {
                Ok(b) => b,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(HarnessError::Missing { path }),
                Err(e) => return Err(HarnessError::io(path, e)),
            };
            let actual = sha256_hex(&bytes);
            if actual != a.sha256 {
                return Err(HarnessError::Checksum {
                    path,
                    expected: a.sha256.clone(),
                    actual,
                });
            }
        }
        Ok(())
    }

    pub fn artifact<'a>(&'a self, role: &'a str) -> impl Iterator<Item = &'a ArtifactRecord> + 'a {
        self.artifacts.iter().filter(move |a| a.role == role)
    }
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => HarnessError::Missing { path: path.to_path_buf() },
        _ => HarnessError::io(path, e),
    })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Corrupt {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

/// Writes files under a run directory and records their checksums.
#[derive(Debug)]
pub struct ArtifactSink {
    root: PathBuf,
    records: Vec<ArtifactRecord>,
}

impl ArtifactSink {
    pub fn new(root: &Path) -> Self {
        ArtifactSink {
            root: root.to_path_buf(),
            records: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8], role: &str) -> Result<String> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))?;
        self.records.push(ArtifactRecord {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
            role: role.to_string(),
        });
        Ok(rel.to_string())
    }

    pub fn into_records(self) -> Vec<ArtifactRecord> {
        self.records
    }
}
