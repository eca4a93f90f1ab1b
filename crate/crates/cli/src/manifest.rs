use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    /// File path as given on the command line; `-` is stdout.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

impl FileDigest {
    pub fn of(path: &str, bytes: &[u8]) -> Self {
        Self { path: path.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() }
    }
}

/// Everything needed to reproduce one run. Contains no timestamps, so an
/// identical run writes an identical manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, replayable from the same directory.
    pub argv: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// One produced document; `None` means stdout.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub dest: Option<PathBuf>,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn label(&self) -> String {
        self.dest.as_deref().map_or_else(|| "-".to_string(), |p| p.display().to_string())
    }
}

pub fn display(path: &Path) -> String {
    path.display().to_string()
}
