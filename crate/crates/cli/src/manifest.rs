//! Run manifests: what was run, with which inputs, and digests of every
//! file written.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::formats::{self, FormatError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<OutputDigest>,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, FormatError> {
    let bytes = std::fs::read(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(sha256_hex(&bytes))
}

/// Collects outputs while a command runs.
#[derive(Debug)]
pub struct ManifestBuilder {
    manifest: RunManifest,
    files: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn start(command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            manifest: RunManifest {
                command: command.to_string(),
                config,
                seed,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                started_unix: now(),
                finished_unix: 0.0,
                outputs: Vec::new(),
            },
            files: Vec::new(),
        }
    }

    /// Writes `text` to `path` and records its digest.
    pub fn write(&mut self, path: &Path, text: &str) -> Result<(), FormatError> {
        formats::write_text(path, text)?;
        self.manifest.outputs.push(OutputDigest {
            path: path.file_name().map_or_else(
                || path.display().to_string(),
                |s| s.to_string_lossy().into_owned(),
            ),
            sha256: sha256_hex(text.as_bytes()),
        });
        self.files.push(path.to_path_buf());
        Ok(())
    }

    pub fn finish(mut self, path: &Path) -> Result<RunManifest, FormatError> {
        self.manifest.finished_unix = now();
        let text = serde_json::to_string_pretty(&self.manifest).expect("serializable") + "\n";
        formats::write_text(path, &text)?;
        Ok(self.manifest)
    }
}

/// Re-hashes every output listed in a manifest stored in `dir`; returns the
/// paths whose digest no longer matches.
pub fn verify_digests(manifest: &RunManifest, dir: &Path) -> Result<Vec<String>, FormatError> {
    let mut bad = Vec::new();
    for o in &manifest.outputs {
        if sha256_file(&dir.join(&o.path))? != o.sha256 {
            bad.push(o.path.clone());
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digests_match_written_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = ManifestBuilder::start("test", serde_json::json!({"x": 1}), Some(3));
        b.write(&dir.path().join("a.csv"), "m\n1\n").unwrap();
        let m = b.finish(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(m.outputs.len(), 1);
        assert!(m.finished_unix >= m.started_unix);
        assert!(verify_digests(&m, dir.path()).unwrap().is_empty());
        std::fs::write(dir.path().join("a.csv"), "m\n2\n").unwrap();
        assert_eq!(
            verify_digests(&m, dir.path()).unwrap(),
            vec!["a.csv".to_string()]
        );
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
