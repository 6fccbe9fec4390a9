//! Run configuration: one JSON document, merged over a preset.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::eigen::Engine;
use crate::error::{Error, Result};
use crate::media::MediumSpec;
use crate::pde::{InitialDatum, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSection {
    pub t_final: f64,
    #[serde(default)]
    pub datum: InitialDatum,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_levels() -> Vec<f64> {
    vec![0.1, 0.5, 0.9]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSection {
    pub engine: Engine,
    #[serde(default = "default_p_range")]
    pub p_range: (f64, f64),
    #[serde(default = "default_p_step")]
    pub p_step: f64,
    #[serde(default = "default_r_sequence")]
    pub r_sequence: Vec<f64>,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_refine")]
    pub refine_points: usize,
}

fn default_p_range() -> (f64, f64) {
    (-4.0, 4.0)
}

fn default_p_step() -> f64 {
    0.125
}

fn default_r_sequence() -> Vec<f64> {
    vec![10.0, 20.0, 40.0]
}

fn default_width() -> f64 {
    100.0
}

fn default_refine() -> usize {
    4
}

impl EigenSection {
    pub fn p_grid(&self) -> Vec<f64> {
        let (lo, hi) = self.p_range;
        let n = ((hi - lo) / self.p_step).round() as i64;
        (0..=n).map(|k| lo + k as f64 * self.p_step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedSection {
    pub w_max: f64,
    pub delta: f64,
    pub window_start: f64,
    pub log_correction: bool,
    /// Relative tolerance of the sandwich verdict.
    pub tolerance: f64,
    /// Snapshots kept uniformly over the analysis window.
    pub snapshot_count: usize,
    /// Require `w_star_emp < w_upper_emp` with a relative gap above `gap_fraction`.
    pub expect_gap: bool,
    pub gap_fraction: f64,
}

impl Default for SpeedSection {
    fn default() -> Self {
        SpeedSection {
            w_max: 4.0,
            delta: 0.05,
            window_start: 0.5,
            log_correction: true,
            tolerance: 0.1,
            snapshot_count: 51,
            expect_gap: false,
            gap_fraction: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSection {
    pub window: (f64, f64),
    pub samples: usize,
}

impl Default for ValidationSection {
    fn default() -> Self {
        ValidationSection {
            window: (-100.0, 1000.0),
            samples: 20_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    /// Also write every kept snapshot as `snapshots.csv`.
    pub snapshots: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub description: String,
    pub medium: MediumSpec,
    pub pde: PdeSection,
    pub eigen: EigenSection,
    #[serde(default)]
    pub speed: SpeedSection,
    #[serde(default)]
    pub validation: ValidationSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Recursive merge: objects merge key by key, everything else is replaced.
pub fn deep_merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

/// Serialize with object keys sorted at every level.
pub fn canonical_json(v: &Value) -> String {
    fn sorted(v: &Value) -> Value {
        match v {
            Value::Object(m) => {
                let mut keys: Vec<&String> = m.keys().collect();
                keys.sort();
                let mut out = serde_json::Map::new();
                for k in keys {
                    out.insert(k.clone(), sorted(&m[k]));
                }
                Value::Object(out)
            }
            Value::Array(a) => Value::Array(a.iter().map(sorted).collect()),
            other => other.clone(),
        }
    }
    serde_json::to_string(&sorted(v)).expect("json values serialize")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunConfig {
    /// Parse a document, merging it over its `preset` when one is named.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let user: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
        Self::from_value(user)
    }

    pub fn from_value(user: Value) -> Result<Self> {
        if !user.is_object() {
            return Err(Error::Config("config must be a JSON object".into()));
        }
        let merged = match user.get("preset").and_then(Value::as_str) {
            Some(name) => {
                let mut base = super::presets::preset_value(name)?;
                let canonical = base["preset"].clone();
                deep_merge(&mut base, &user);
                base["preset"] = canonical;
                base
            }
            None => user,
        };
        let cfg: RunConfig = serde_json::from_value(merged).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_preset(name: &str) -> Result<Self> {
        Self::from_value(serde_json::json!({ "preset": name }))
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.pde.t_final > 0.0) {
            return bad(format!("pde.t_final = {} must be positive", self.pde.t_final));
        }
        if !(self.speed.tolerance > 0.0) || !(self.speed.delta > 0.0 && self.speed.delta < 1.0) {
            return bad("speed.tolerance must be positive and speed.delta in (0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.speed.window_start) {
            return bad(format!("speed.window_start = {} outside [0, 1)", self.speed.window_start));
        }
        if !(self.speed.w_max > 0.0) || self.speed.snapshot_count == 0 {
            return bad("speed.w_max and speed.snapshot_count must be positive".into());
        }
        let (lo, hi) = self.eigen.p_range;
        if !(self.eigen.p_step > 0.0) || !(lo < 0.0 && hi > 0.0) {
            return bad("eigen.p_range must straddle 0 and eigen.p_step be positive".into());
        }
        if !(self.eigen.width > 0.0) || self.eigen.r_sequence.is_empty() {
            return bad("eigen.width must be positive and eigen.r_sequence nonempty".into());
        }
        if self.validation.samples < 2 || !(self.validation.window.0 < self.validation.window.1) {
            return bad("validation window must be nonempty with >= 2 samples".into());
        }
        Ok(())
    }

    /// The config with the seed applied to seeded media.
    pub fn effective_medium(&self) -> MediumSpec {
        let mut spec = self.medium.clone();
        if let (Some(s), MediumSpec::RandomErgodic { seed, .. }) = (self.seed, &mut spec) {
            *seed = s;
        }
        spec
    }

    pub fn canonical(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("config serializes"))
    }

    /// SHA-256 of the canonical form; independent of key order in the source file.
    pub fn hash(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }
}
