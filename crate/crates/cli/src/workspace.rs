//! Workspace layout, locking, and the stage manifest.
//!
//! A workspace is a directory owned by one process at a time (lock file).
//! Each stage writes its outputs under `<workspace>/<stage>/` and records
//! an entry in `manifest.json`: the hash of everything the stage read, the
//! files it wrote, counts, and a completion timestamp. A stage whose input
//! hash is unchanged and whose outputs are all present is a no-op on rerun;
//! only its timestamp is refreshed.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Every runnable stage that leaves a manifest record, in dependency
/// order. `stats` reads the filter outputs, so it slots after `prune`
/// without disturbing the relative order of the six pipeline stages.
pub const STAGE_ORDER: [&str; 7] = [
    "filter", "prune", "stats", "harvest", "annotate", "score", "emit",
];

/// The stages `pipeline` runs, in order.
pub const PIPELINE_STAGES: [&str; 6] = ["filter", "prune", "harvest", "annotate", "score", "emit"];

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("workspace {0} is locked by another process (remove .lock if stale)")]
    Locked(PathBuf),
    #[error("workspace io: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest is not valid JSON: {0}")]
    BadManifest(String),
    #[error("stage {stage} requires outputs of {missing}; run that stage first")]
    MissingUpstream { stage: String, missing: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub input_hash: String,
    /// Workspace-relative paths, sorted.
    pub outputs: Vec<String>,
    pub completed_at_epoch: u64,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: Vec<StageRecord>,
}

impl Manifest {
    pub fn record(&self, stage: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }

    /// Inserts or replaces a record, keeping `stages` in STAGE_ORDER.
    pub fn upsert(&mut self, record: StageRecord) {
        self.stages.retain(|r| r.stage != record.stage);
        self.stages.push(record);
        let rank = |name: &str| {
            STAGE_ORDER
                .iter()
                .position(|s| *s == name)
                .unwrap_or(STAGE_ORDER.len())
        };
        self.stages.sort_by_key(|r| rank(&r.stage));
    }
}

/// Accumulates labelled byte slices into one input fingerprint. Labels keep
/// reordered inputs from colliding: the pair (label, payload) is delimited
/// by length prefixes before hashing.
pub struct StageHasher {
    hasher: Sha256,
}

impl StageHasher {
    pub fn new(stage: &str) -> StageHasher {
        let mut hasher = Sha256::new();
        hasher.update(stage.as_bytes());
        StageHasher { hasher }
    }

    pub fn add(&mut self, label: &str, payload: &[u8]) {
        self.hasher.update((label.len() as u64).to_le_bytes());
        self.hasher.update(label.as_bytes());
        self.hasher.update((payload.len() as u64).to_le_bytes());
        self.hasher.update(payload);
    }

    pub fn finish(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

pub struct Workspace {
    root: PathBuf,
    lock_path: PathBuf,
    pub manifest: Manifest,
}

impl Workspace {
    /// Creates the directory if needed and takes the exclusive lock.
    pub fn open(root: &Path) -> Result<Workspace, WorkspaceError> {
        fs::create_dir_all(root)?;
        let lock_path = root.join(".lock");
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock_path)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => WorkspaceError::Locked(root.to_path_buf()),
                _ => WorkspaceError::Io(e),
            })?;
        let manifest_path = root.join("manifest.json");
        let manifest = if manifest_path.exists() {
            let text = fs::read_to_string(&manifest_path)?;
            serde_json::from_str(&text)
                .map_err(|e| WorkspaceError::BadManifest(e.to_string()))?
        } else {
            Manifest::default()
        };
        Ok(Workspace {
            root: root.to_path_buf(),
            lock_path,
            manifest,
        })
    }

    pub fn stage_dir(&self, stage: &str) -> PathBuf {
        self.root.join(stage)
    }

    /// True when the recorded hash matches and every recorded output file
    /// still exists; such a stage only needs its timestamp refreshed.
    pub fn is_current(&self, stage: &str, input_hash: &str) -> bool {
        match self.manifest.record(stage) {
            Some(record) => {
                record.input_hash == input_hash
                    && !record.outputs.is_empty()
                    && record.outputs.iter().all(|p| self.root.join(p).exists())
            }
            None => false,
        }
    }

    /// Completed-stage check for downstream consumers.
    pub fn require_stage(&self, consumer: &str, upstream: &str) -> Result<(), WorkspaceError> {
        let ok = self
            .manifest
            .record(upstream)
            .is_some_and(|r| r.outputs.iter().all(|p| self.root.join(p).exists()));
        if ok {
            Ok(())
        } else {
            Err(WorkspaceError::MissingUpstream {
                stage: consumer.to_string(),
                missing: upstream.to_string(),
            })
        }
    }

    /// The recorded input hash of an upstream stage, folded into dependents'
    /// own hashes so a rerun upstream invalidates everything below it.
    pub fn upstream_hash(&self, consumer: &str, upstream: &str) -> Result<String, WorkspaceError> {
        self.require_stage(consumer, upstream)?;
        Ok(self.manifest.record(upstream).unwrap().input_hash.clone())
    }

    /// Empties `<workspace>/<stage>/` so a rerun cannot leave stale files.
    pub fn clear_stage_dir(&self, stage: &str) -> Result<(), WorkspaceError> {
        let dir = self.stage_dir(stage);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        Ok(())
    }

    /// Writes one stage output file, creating parent directories, and
    /// returns its workspace-relative path for the manifest.
    pub fn write_output(
        &self,
        stage: &str,
        relative: &str,
        bytes: &[u8],
    ) -> Result<String, WorkspaceError> {
        let path = self.stage_dir(stage).join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        Ok(format!("{stage}/{relative}"))
    }

    pub fn touch_stage(&mut self, stage: &str) -> Result<(), WorkspaceError> {
        if let Some(record) = self.manifest.stages.iter_mut().find(|r| r.stage == stage) {
            record.completed_at_epoch = epoch_now();
        }
        self.save_manifest()
    }

    pub fn complete_stage(
        &mut self,
        stage: &str,
        input_hash: String,
        mut outputs: Vec<String>,
        counts: BTreeMap<String, u64>,
    ) -> Result<(), WorkspaceError> {
        outputs.sort();
        self.manifest.upsert(StageRecord {
            stage: stage.to_string(),
            input_hash,
            outputs,
            completed_at_epoch: epoch_now(),
            counts,
        });
        self.save_manifest()
    }

    fn save_manifest(&self) -> Result<(), WorkspaceError> {
        let mut text = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| WorkspaceError::BadManifest(e.to_string()))?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(())
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock_path);
    }
}

fn epoch_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
