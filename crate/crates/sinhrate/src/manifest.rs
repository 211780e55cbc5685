//! Run manifests: effective settings plus SHA-256 digests of every input and
//! output file, enough to replay a run and check that it reproduces.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// The parsed command with every default filled in; `replay` runs it again.
    pub invocation: serde_json::Value,
    pub settings: BTreeMap<String, serde_json::Value>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn digest(path: &Path) -> CliResult<FileDigest> {
    Ok(FileDigest { path: path.to_path_buf(), sha256: sha256_file(path)? })
}

impl Manifest {
    pub fn new(command: &str, invocation: serde_json::Value) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            invocation,
            settings: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn setting(&mut self, key: &str, value: impl Serialize) {
        self.settings.insert(key.to_string(), serde_json::to_value(value).expect("serialisable setting"));
    }

    pub fn add_input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.push(digest(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> CliResult<()> {
        self.outputs.push(digest(path)?);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        std::fs::write(&path, s).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }

    /// Inputs whose current digest differs from the recorded one.
    pub fn changed_inputs(&self) -> CliResult<Vec<PathBuf>> {
        let mut out = Vec::new();
        for f in &self.inputs {
            if sha256_file(&f.path)? != f.sha256 {
                out.push(f.path.clone());
            }
        }
        Ok(out)
    }
}
