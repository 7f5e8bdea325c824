use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::hex;
use crate::error::{LabError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Index of everything a run wrote into the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    /// Paths relative to the output directory.
    pub artifacts: BTreeMap<String, Artifact>,
    pub stages: Vec<StageTiming>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(config_hash: &str) -> Self {
        RunManifest {
            config_hash: config_hash.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            artifacts: BTreeMap::new(),
            stages: Vec::new(),
        }
    }

    /// Existing manifest of `dir` when it belongs to the same config, a
    /// fresh one otherwise.
    pub fn load_or_new(dir: &Path, config_hash: &str) -> Self {
        std::fs::read(dir.join(MANIFEST_FILE))
            .ok()
            .and_then(|b| serde_json::from_slice::<RunManifest>(&b).ok())
            .filter(|m| m.config_hash == config_hash)
            .unwrap_or_else(|| RunManifest::new(config_hash))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let bytes = std::fs::read(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    /// Every listed file exists and matches its checksum.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for (rel, a) in &self.artifacts {
            let path = dir.join(rel);
            let bytes = std::fs::read(&path)
                .map_err(|e| LabError::CorruptCache { path: path.display().to_string(), message: e.to_string() })?;
            if sha256_hex(&bytes) != a.sha256 {
                return Err(LabError::CorruptCache {
                    path: path.display().to_string(),
                    message: "checksum mismatch".into(),
                });
            }
        }
        Ok(())
    }
}

/// Single funnel for every file a command writes; keeps the manifest in
/// step with the directory.
pub struct OutputStage {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl OutputStage {
    pub fn open(dir: &Path, config_hash: &str) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputStage { dir: dir.to_path_buf(), manifest: RunManifest::load_or_new(dir, config_hash) })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.manifest
            .artifacts
            .insert(rel.replace('\\', "/"), Artifact { sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(path)
    }

    /// Records a file written by other means (e.g. the field writer).
    pub fn register(&mut self, rel: &str) -> Result<()> {
        let bytes = std::fs::read(self.dir.join(rel))?;
        self.manifest
            .artifacts
            .insert(rel.replace('\\', "/"), Artifact { sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self);
        let seconds = start.elapsed().as_secs_f64();
        self.manifest.stages.retain(|s| s.stage != stage);
        self.manifest.stages.push(StageTiming { stage: stage.to_string(), seconds });
        out
    }

    pub fn finish(self) -> Result<RunManifest> {
        let text = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(self.dir.join(MANIFEST_FILE), text)?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksums_track_files() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputStage::open(tmp.path(), "abc").unwrap();
        out.time("write", |o| o.write("sub/a.csv", b"x,y\n1,2\n").map(|_| ())).unwrap();
        let m = out.finish().unwrap();
        assert!(m.verify(tmp.path()).is_ok());
        assert_eq!(RunManifest::load(tmp.path()).unwrap(), m);
        std::fs::write(tmp.path().join("sub/a.csv"), b"x,y\n1,3\n").unwrap();
        assert!(matches!(m.verify(tmp.path()), Err(LabError::CorruptCache { .. })));
        assert!(RunManifest::load_or_new(tmp.path(), "other").artifacts.is_empty());
    }
}
