//! Run manifest: stage completion flags and artifact paths, persisted after
//! every stage so interrupted runs resume exactly where they stopped.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::pipeline::ExperimentConfig;

pub const STAGES: [&str; 6] = [
    "extract",
    "validate",
    "administer",
    "geometry",
    "analyze",
    "report",
];

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageState {
    pub complete: bool,
    /// Artifact paths relative to the run directory.
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub stages: BTreeMap<String, StageState>,
}

/// SHA-256 of the canonical JSON serialization of the config.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let json = serde_json::to_string(cfg)?;
    let digest = Sha256::digest(json.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        Self {
            config_hash,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            stages: BTreeMap::new(),
        }
    }

    pub fn path(run_dir: &Path) -> PathBuf {
        run_dir.join("manifest.json")
    }

    /// Load the manifest for this run, starting fresh when none exists or
    /// when the config hash changed.
    pub fn load_or_new(run_dir: &Path, config_hash: &str) -> Result<Self> {
        let path = Self::path(run_dir);
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            let manifest: RunManifest = serde_json::from_str(&text)?;
            if manifest.config_hash == config_hash {
                return Ok(manifest);
            }
        }
        Ok(Self::new(config_hash.to_string()))
    }

    pub fn save(&self, run_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(run_dir)?;
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(Self::path(run_dir), text)?;
        Ok(())
    }

    /// A stage is skippable when it is marked complete and every recorded
    /// artifact still exists on disk.
    pub fn stage_done(&self, run_dir: &Path, stage: &str) -> bool {
        self.stages.get(stage).is_some_and(|s| {
            s.complete && s.artifacts.iter().all(|a| run_dir.join(a).exists())
        })
    }

    pub fn record(&mut self, stage: &str, artifacts: Vec<PathBuf>) {
        self.stages.insert(
            stage.to_string(),
            StageState {
                complete: true,
                artifacts,
            },
        );
    }

    pub fn artifacts(&self, stage: &str) -> Option<&[PathBuf]> {
        self.stages.get(stage).map(|s| s.artifacts.as_slice())
    }
}
