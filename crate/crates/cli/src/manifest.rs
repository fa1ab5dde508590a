use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io;

/// A hashed file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

impl Artifact {
    pub fn of(path: &Path, shown_as: &str) -> Result<Self> {
        Ok(Self {
            path: shown_as.to_owned(),
            sha256: io::sha256_file(path)?,
        })
    }
}

/// Record of one command run, written as `manifest.json` in the output
/// directory. Output paths are relative to that directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub sub_seeds: BTreeMap<String, u64>,
    pub deterministic: bool,
    pub config: serde_json::Value,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started_unix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_unix: Option<u64>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn start(command: &str, argv: &[String], seed: u64, deterministic: bool, config: serde_json::Value) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            argv: argv.to_vec(),
            seed,
            sub_seeds: BTreeMap::new(),
            deterministic,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix: (!deterministic).then(now),
            finished_unix: None,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(Artifact::of(path, &path.display().to_string())?);
        Ok(())
    }

    /// Hash every file in `outputs` (relative to `out`) and write the
    /// manifest next to them.
    pub fn finish(mut self, out: &Path, outputs: &[PathBuf]) -> Result<()> {
        for rel in outputs {
            self.outputs.push(Artifact::of(&out.join(rel), &rel.display().to_string())?);
        }
        self.finished_unix = (!self.deterministic).then(now);
        io::write_json(&out.join("manifest.json"), &self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_manifests_have_no_clock() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "x").unwrap();
        let m = RunManifest::start("synth", &["autoeda".into()], 3, true, serde_json::json!({}));
        m.finish(dir.path(), &[PathBuf::from("a.txt")]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(!text.contains("unix"));
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.outputs[0].path, "a.txt");
        assert_eq!(back.seed, 3);
    }
}
