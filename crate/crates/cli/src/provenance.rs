//! Provenance sidecars: tool version, non-path flags and SHA-256 digests of
//! every input. No timestamps or absolute paths, so identical runs produce
//! identical sidecars.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mlpc_core::canonical::to_canonical_json;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub struct Provenance {
    command: &'static str,
    flags: BTreeMap<String, Value>,
    inputs: Vec<Value>,
}

impl Provenance {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            flags: BTreeMap::new(),
            inputs: Vec::new(),
        }
    }

    pub fn flag(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.flags.insert(name.to_string(), value.into());
        self
    }

    /// Records the digest of one input file under `role`.
    pub fn input(&mut self, role: &str, path: &Path) -> Result<&mut Self, CliError> {
        let bytes = fs::read(path).map_err(|e| mlpc_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.inputs.push(json!({
            "role": role,
            "file": name,
            "sha256": hex::encode(Sha256::digest(&bytes)),
        }));
        Ok(self)
    }

    pub fn inputs(&mut self, role: &str, paths: &[PathBuf]) -> Result<&mut Self, CliError> {
        for p in paths {
            self.input(role, p)?;
        }
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(&json!({
            "tool": "mlpc",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "flags": self.flags,
            "inputs": self.inputs,
        }))
    }

    /// Writes `<output>.provenance.json` next to a file output, or
    /// `provenance.json` inside a directory output.
    pub fn write_for(&self, output: &Path) -> Result<PathBuf, CliError> {
        let path = if output.is_dir() {
            output.join("provenance.json")
        } else {
            let mut name = output.file_name().unwrap_or_default().to_os_string();
            name.push(".provenance.json");
            output.with_file_name(name)
        };
        fs::write(&path, self.to_json() + "\n").map_err(|e| mlpc_core::Error::Io {
            path: path.clone(),
            source: e,
        })?;
        Ok(path)
    }
}
