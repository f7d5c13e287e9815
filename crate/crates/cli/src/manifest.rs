use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub name: String,
    pub sha256: String,
}

/// Everything needed to re-run a command and get the same bytes back.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, Value>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<InputDigest>,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        RunManifest {
            tool: "ftrisk",
            tool_version: TOOL_VERSION,
            command: command.to_owned(),
            seed,
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn param(&mut self, name: &str, value: impl Serialize) -> &mut Self {
        self.parameters.insert(
            name.to_owned(),
            serde_json::to_value(value).expect("parameter serializes"),
        );
        self
    }

    pub fn input(&mut self, name: &str, contents: &str) {
        self.inputs.push(InputDigest {
            name: name.to_owned(),
            sha256: sha256(contents.as_bytes()),
        });
    }
}

pub fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads an input file and records its digest.
pub fn read_input(manifest: &mut RunManifest, path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    manifest.input(&path.display().to_string(), &text);
    Ok(text)
}

/// Collects output files and writes them together with the manifest,
/// which goes to `<primary output>.manifest.json`.
pub struct Outputs {
    primary: PathBuf,
    files: Vec<(PathBuf, String)>,
}

impl Outputs {
    pub fn new(primary: &Path) -> Self {
        Outputs {
            primary: primary.to_owned(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, path: &Path, contents: String) {
        self.files.push((path.to_owned(), contents));
    }

    pub fn add_json(&mut self, path: &Path, value: &impl Serialize) {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.add(path, text);
    }

    pub fn write(self, mut manifest: RunManifest) -> Result<()> {
        for (path, contents) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
            manifest.outputs.push(InputDigest {
                name: path.display().to_string(),
                sha256: sha256(contents.as_bytes()),
            });
        }
        let mut path = self.primary.into_os_string();
        path.push(".manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", Path::new(&path).display()))?;
        Ok(())
    }
}
