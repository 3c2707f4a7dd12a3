//! Run manifests: what ran, with which resolved configuration, and digests of
//! everything written.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    /// The configuration with every default written out.
    pub config: serde_json::Value,
    pub threads: usize,
    pub duration_seconds: f64,
    pub outputs: Vec<OutputDigest>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

pub fn sha256_file(path: &Path) -> std::io::Result<(String, u64)> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(hasher.finalize()), total))
}

impl RunManifest {
    pub fn digest_outputs(dir: &Path, files: &[String]) -> CliResult<Vec<OutputDigest>> {
        files
            .iter()
            .map(|rel| {
                let (sha256, bytes) = sha256_file(&dir.join(rel)).map_err(CliError::io(format!("digesting {rel}")))?;
                Ok(OutputDigest { path: rel.clone(), sha256, bytes })
            })
            .collect()
    }

    /// Recomputes every digest and reports the first file that no longer matches.
    pub fn check(&self, dir: &Path) -> CliResult<()> {
        for out in &self.outputs {
            let (sha, _) = sha256_file(&dir.join(&out.path)).map_err(CliError::io(format!("digesting {}", out.path)))?;
            if sha != out.sha256 {
                return Err(CliError::Failed(format!("{} does not match its recorded digest", out.path)));
            }
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Failed(e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), text + "\n").map_err(CliError::io("writing manifest.json"))
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(dir.join("manifest.json")).map_err(CliError::io("reading manifest.json"))?;
        serde_json::from_str(&text).map_err(|e| CliError::Failed(format!("manifest.json: {e}")))
    }
}
