//! Run manifest: written when a run starts, rewritten after every stage.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::sha256_hex;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageState {
    Pending,
    Running,
    Done,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageStatus {
    pub name: String,
    pub state: StageState,
    pub seconds: Option<f64>,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub finalized: bool,
    pub exit_code: Option<i32>,
    pub stages: Vec<StageStatus>,
    pub outputs: Vec<OutputEntry>,
    #[serde(skip)]
    dir: PathBuf,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    /// Create the directory and write the initial manifest.
    pub fn begin(dir: &Path, config_hash: &str, seed: Option<u64>, stages: &[&str]) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let m = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash.to_string(),
            seed,
            started_at: now(),
            finished_at: None,
            finalized: false,
            exit_code: None,
            stages: stages
                .iter()
                .map(|s| StageStatus {
                    name: s.to_string(),
                    state: StageState::Pending,
                    seconds: None,
                    detail: None,
                })
                .collect(),
            outputs: Vec::new(),
            dir: dir.to_path_buf(),
        };
        m.write()?;
        Ok(m)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn stage_mut(&mut self, name: &str) -> &mut StageStatus {
        if let Some(i) = self.stages.iter().position(|s| s.name == name) {
            return &mut self.stages[i];
        }
        self.stages.push(StageStatus {
            name: name.to_string(),
            state: StageState::Pending,
            seconds: None,
            detail: None,
        });
        self.stages.last_mut().unwrap()
    }

    pub fn set_stage(&mut self, name: &str, state: StageState, seconds: Option<f64>, detail: Option<String>) -> Result<()> {
        let s = self.stage_mut(name);
        s.state = state;
        s.seconds = seconds;
        s.detail = detail;
        self.write()
    }

    /// Write `bytes` under the run directory and record its hash.
    pub fn add_output(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.record(rel, bytes);
        Ok(())
    }

    /// Record an already written file.
    pub fn record_existing(&mut self, rel: &str) -> Result<()> {
        let bytes = fs::read(self.dir.join(rel))?;
        self.record(rel, &bytes);
        Ok(())
    }

    fn record(&mut self, rel: &str, bytes: &[u8]) {
        let entry = OutputEntry {
            path: rel.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        };
        match self.outputs.iter_mut().find(|o| o.path == rel) {
            Some(o) => *o = entry,
            None => self.outputs.push(entry),
        }
    }

    pub fn finalize(&mut self, exit_code: i32) -> Result<()> {
        for s in &mut self.stages {
            if matches!(s.state, StageState::Pending | StageState::Running) {
                s.state = StageState::Skipped;
            }
        }
        self.finished_at = Some(now());
        self.exit_code = Some(exit_code);
        self.finalized = true;
        self.write()
    }

    fn write(&self) -> Result<()> {
        let tmp = self.dir.join(".manifest.json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        fs::rename(&tmp, self.dir.join(MANIFEST_FILE))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let mut m: RunManifest = serde_json::from_str(&text)?;
        m.dir = dir.to_path_buf();
        Ok(m)
    }

    /// Every listed output exists and matches its hash.
    pub fn verify(&self) -> std::result::Result<(), String> {
        for o in &self.outputs {
            let bytes = fs::read(self.dir.join(&o.path)).map_err(|e| format!("{}: {e}", o.path))?;
            if sha256_hex(&bytes) != o.sha256 {
                return Err(format!("{}: hash mismatch", o.path));
            }
        }
        Ok(())
    }
}
