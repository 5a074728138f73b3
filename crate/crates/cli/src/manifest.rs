//! Run manifest: tool version, resolved configuration, timestamps and
//! SHA-256 digests of every emitted file. Written after all other
//! outputs so its digests always describe the final bytes.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub experiment: String,
    pub base_seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub resolved_config: BTreeMap<String, String>,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn digest_outputs(dir: &Path, files: &[&str]) -> io::Result<Vec<OutputDigest>> {
        files
            .iter()
            .map(|name| {
                Ok(OutputDigest { file: (*name).to_string(), sha256: sha256_hex(&dir.join(name))? })
            })
            .collect()
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(io::BufWriter::new(file), self)
            .map_err(|e| io::Error::other(e.to_string()))?;
        Ok(())
    }
}

pub fn sha256_hex(path: &Path) -> io::Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
