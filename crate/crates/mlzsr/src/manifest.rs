//! Run manifests: the command, its fully resolved configuration, the seeds in
//! play and a SHA-256 hash of every input and output file. A manifest is
//! written next to the primary output as `<output>.manifest.json`, and can be
//! passed back as `--config` to rerun the command with identical settings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{AppError, AppResult};
use crate::io::{read_bytes, read_text, sha256_hex, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl Artifact {
    pub fn hash(role: &str, path: &Path) -> AppResult<Self> {
        Ok(Self {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: sha256_hex(&read_bytes(path)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: Config,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, config: &Config) -> Self {
        Self {
            command: command.to_string(),
            args,
            config: config.clone(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    pub fn input(&mut self, role: &str, path: &Path) -> AppResult<()> {
        self.inputs.push(Artifact::hash(role, path)?);
        Ok(())
    }

    pub fn output(&mut self, role: &str, path: &Path) -> AppResult<()> {
        self.outputs.push(Artifact::hash(role, path)?);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Writes the manifest beside `primary` and returns its path.
    pub fn write_beside(&self, primary: &Path) -> AppResult<PathBuf> {
        let path = manifest_path(primary);
        write_atomic(&path, self.to_json().as_bytes())?;
        Ok(path)
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        serde_json::from_str(&read_text(path)?)
            .map_err(|e| AppError::config(format!("{}: invalid manifest: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("x.txt");
        std::fs::write(&out, b"abc").unwrap();
        let mut cfg = Config::default();
        cfg.train.lr_visual = 0.1 + 0.2;
        let mut m = RunManifest::new("train", vec!["--seed".into(), "3".into()], &cfg);
        m.seed("train", u64::MAX);
        m.output("checkpoint", &out).unwrap();
        assert_eq!(
            m.outputs[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let path = m.write_beside(&out).unwrap();
        assert!(path.ends_with("x.txt.manifest.json"));
        assert_eq!(RunManifest::load(&path).unwrap(), m);
    }
}
