//! CSV outputs and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// SHA-256 of `blob <len>\0<content>`, the object hash git uses in its
/// SHA-256 repositories.
pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

pub fn file_hash(content: &[u8]) -> String {
    hex::encode(Sha256::digest(content))
}

/// Collects the files of one run and writes `manifest.json` last.
pub struct RunOutput {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl RunOutput {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.insert(name.to_string(), file_hash(bytes));
        Ok(())
    }

    /// Writes the manifest; `inputs` is everything that determines the
    /// outputs, serialized once so its hash is stable.
    pub fn finish<C: Serialize>(self, experiment: &str, seed: u64, config: &C) -> Result<Manifest> {
        let config = serde_json::to_value(config)?;
        let inputs = serde_json::to_vec(&serde_json::json!({
            "experiment": experiment,
            "config": config,
        }))?;
        let manifest = Manifest {
            experiment: experiment.to_string(),
            seed,
            input_hash: blob_hash(&inputs),
            config,
            outputs: self.files,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(self.dir.join("manifest.json"), text + "\n")?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub seed: u64,
    pub input_hash: String,
    pub config: serde_json::Value,
    /// File name to SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
}

/// File-name tag of a spacing, e.g. `0.100`.
pub fn delta_tag(delta: f64) -> String {
    format!("{delta:.3}")
}
