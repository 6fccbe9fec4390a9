//! The validate, eigen, speed, PDE, report pipeline and parameter sweeps.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::config::RunConfig;
use super::manifest::{RunManifest, StageState};
use crate::eigen::{Engine, WindowOptions};
use crate::error::{Error, Result};
use crate::media::{Medium, ValidationReport};
use crate::num17;
use crate::speed::{
    default_w_grid, empirical_speeds, hamiltonian_table, speed_report, spreading_speed, EmpiricalOptions, FrontSpeedEstimate,
    HamiltonianTable, SpeedReport, SpeedResult, TablePolicy,
};

pub const STAGES: [&str; 6] = ["validate", "eigen", "speed", "pde", "empirical", "report"];

/// Extra verdict for presets whose lower and upper speeds are expected to differ.
#[derive(Clone, Debug, Serialize)]
pub struct GapCheck {
    pub required_fraction: f64,
    pub observed_fraction: Option<f64>,
    pub passed: bool,
}

/// Contents of `speeds.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub preset: Option<String>,
    pub report: SpeedReport,
    pub gap: Option<GapCheck>,
    pub verdict: bool,
    pub theory: SpeedResult,
    pub empirical: FrontSpeedEstimate,
    pub validation: ValidationReport,
    pub pde_nodes: usize,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub exit_code: i32,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
}

/// Directory used when neither the config nor the command line names one.
pub fn default_out_dir(cfg: &RunConfig) -> PathBuf {
    let name = cfg.preset.clone().unwrap_or_else(|| "custom".into());
    PathBuf::from("runs").join(format!("{name}-{}", &cfg.hash()[..12]))
}

pub fn table_policy(cfg: &RunConfig) -> TablePolicy {
    TablePolicy {
        p_grid: cfg.eigen.p_grid(),
        window: WindowOptions {
            r_sequence: cfg.eigen.r_sequence.clone(),
            width: cfg.eigen.width,
            ..WindowOptions::default()
        },
        refine_points: cfg.eigen.refine_points,
    }
}

fn solver_config(cfg: &RunConfig) -> crate::pde::SolverConfig {
    let mut solver = cfg.pde.solver.clone();
    if solver.snapshot_times.is_empty() {
        let t = cfg.pde.t_final;
        let t0 = cfg.speed.window_start * t;
        let n = cfg.speed.snapshot_count;
        solver.snapshot_times = if n == 1 {
            vec![t]
        } else {
            (0..n).map(|k| t0 + (t - t0) * k as f64 / (n - 1) as f64).collect()
        };
    }
    solver
}

fn gap_check(cfg: &RunConfig, emp: &FrontSpeedEstimate) -> Option<GapCheck> {
    if !cfg.speed.expect_gap {
        return None;
    }
    let observed = match (emp.w_star_emp, emp.w_upper_emp) {
        (Some(a), Some(b)) if b > 0.0 => Some((b - a) / b),
        _ => None,
    };
    Some(GapCheck {
        required_fraction: cfg.speed.gap_fraction,
        observed_fraction: observed,
        passed: observed.is_some_and(|g| g > cfg.speed.gap_fraction),
    })
}

struct Pipeline<'a> {
    cfg: &'a RunConfig,
    manifest: RunManifest,
}

impl Pipeline<'_> {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut RunManifest) -> Result<T>) -> Result<T> {
        self.manifest.set_stage(name, StageState::Running, None, None)?;
        let clock = Instant::now();
        let out = f(&mut self.manifest);
        let secs = clock.elapsed().as_secs_f64();
        match &out {
            Ok(_) => self.manifest.set_stage(name, StageState::Done, Some(secs), None)?,
            Err(e) => self.manifest.set_stage(name, StageState::Failed, Some(secs), Some(e.to_string()))?,
        }
        info!("{name}: {secs:.2} s");
        out
    }

    fn execute(&mut self) -> Result<RunSummary> {
        let cfg = self.cfg;
        let (medium, validation): (Medium, ValidationReport) = self.stage("validate", |m| {
            let medium = cfg.effective_medium().build()?;
            let report = medium.validate(cfg.validation.window, cfg.validation.samples);
            m.add_output("validation.json", &serde_json::to_vec_pretty(&report)?)?;
            match report.first_failure() {
                Some(c) => Err(Error::InvalidMedium(format!(
                    "hypothesis check '{}' failed at x = {} (margin {})",
                    c.name, c.witness_x, c.margin
                ))),
                None => Ok((medium, report)),
            }
        })?;
        let table: HamiltonianTable = self.stage("eigen", |m| {
            let table = hamiltonian_table(&medium, &cfg.eigen.engine, &table_policy(cfg))?;
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            m.add_output("hamiltonian.csv", &buf)?;
            let mut buf = Vec::new();
            table.write_eigen_csv(&mut buf)?;
            m.add_output("eigen.csv", &buf)?;
            Ok(table)
        })?;
        let theory = self.stage("speed", |_| spreading_speed(&table))?;
        let trajectory = self.stage("pde", |m| {
            let tr = crate::pde::simulate(&medium, &cfg.pde.datum, cfg.pde.t_final, &solver_config(cfg), &cfg.pde.levels)?;
            let mut buf = Vec::new();
            tr.write_fronts_csv(&mut buf)?;
            m.add_output("fronts.csv", &buf)?;
            if cfg.output.snapshots {
                let mut buf = Vec::new();
                tr.write_snapshots_csv(&mut buf)?;
                m.add_output("snapshots.csv", &buf)?;
            }
            Ok(tr)
        })?;
        let empirical = self.stage("empirical", |_| {
            let opts = EmpiricalOptions {
                delta: cfg.speed.delta,
                window_start: cfg.speed.window_start,
                log_correction: cfg.speed.log_correction,
                ..EmpiricalOptions::default()
            };
            empirical_speeds(&trajectory, &default_w_grid(cfg.speed.w_max), &opts)
        })?;
        self.stage("report", |m| {
            let desc = if cfg.description.is_empty() { medium.description.clone() } else { cfg.description.clone() };
            let mut report = speed_report(&medium.id, &desc, &theory, &empirical, cfg.speed.tolerance);
            report.seed = cfg.seed;
            report.config_hash = Some(cfg.hash());
            let gap = gap_check(cfg, &empirical);
            let verdict = report.verdict && gap.as_ref().is_none_or(|g| g.passed);
            let summary = RunSummary {
                preset: cfg.preset.clone(),
                report,
                gap,
                verdict,
                theory,
                empirical,
                validation,
                pde_nodes: trajectory.final_state.grid.n,
            };
            m.add_output("speeds.json", &serde_json::to_vec_pretty(&summary)?)?;
            m.add_output("config.json", cfg.canonical().as_bytes())?;
            Ok(summary)
        })
    }
}

/// Run the pipeline into `dir`; never panics on numerical failure.
pub fn run(cfg: &RunConfig, dir: &Path) -> RunOutcome {
    let manifest = match RunManifest::begin(dir, &cfg.hash(), cfg.seed, &STAGES) {
        Ok(m) => m,
        Err(e) => {
            return RunOutcome {
                dir: dir.to_path_buf(),
                exit_code: 3,
                summary: None,
                error: Some(format!("cannot create run directory: {e}")),
            }
        }
    };
    let mut p = Pipeline { cfg, manifest };
    let result = p.execute();
    let (exit_code, summary, error) = match result {
        Ok(s) => (if s.verdict { 0 } else { 1 }, Some(s), None),
        Err(e) => (e.exit_code(), None, Some(e.to_string())),
    };
    if let Err(e) = p.manifest.finalize(exit_code) {
        warn!("manifest finalization failed: {e}");
    }
    RunOutcome {
        dir: dir.to_path_buf(),
        exit_code,
        summary,
        error,
    }
}

/// One sweep row.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub dir: String,
    pub exit_code: i32,
    pub medium_id: Option<String>,
    pub w_under: Option<f64>,
    pub w_over: Option<f64>,
    pub w_star_emp: Option<f64>,
    pub w_upper_emp: Option<f64>,
    pub verdict: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub dir: PathBuf,
    pub exit_code: i32,
    pub rows: Vec<SweepRow>,
}

/// Sweep shorthands resolve to these config paths.
fn parameter_path(cfg: &RunConfig, name: &str) -> Result<Vec<String>> {
    let path = match name {
        "seed" => "seed",
        "b0" => "medium.b0",
        "alpha" => "medium.alpha",
        "epsilon" => {
            if !matches!(cfg.eigen.engine, Engine::Corrector { .. }) {
                return Err(Error::Config("sweep over epsilon needs the corrector engine".into()));
            }
            "eigen.engine.epsilons"
        }
        other => other,
    };
    Ok(path.split('.').map(str::to_string).collect())
}

/// The config with `name` set to `value`.
pub fn apply_parameter(cfg: &RunConfig, name: &str, value: f64) -> Result<RunConfig> {
    let path = parameter_path(cfg, name)?;
    let mut doc = serde_json::to_value(cfg)?;
    let replacement = match name {
        "seed" => {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(Error::Config(format!("seed {value} is not a nonnegative integer")));
            }
            Value::from(value as u64)
        }
        // Richardson needs a refinement ladder ending at the requested step.
        "epsilon" => serde_json::json!([4.0 * value, 2.0 * value, value]),
        _ => Value::from(value),
    };
    let mut slot = &mut doc;
    for (i, key) in path.iter().enumerate() {
        let obj = slot
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("'{}' is not a config section", path[..i].join("."))))?;
        if !obj.contains_key(key.as_str()) {
            return Err(Error::Config(format!("unknown sweep parameter '{name}' for this config")));
        }
        slot = obj.get_mut(key.as_str()).unwrap();
    }
    if slot.is_object() || slot.is_array() && name != "epsilon" {
        return Err(Error::Config(format!("sweep parameter '{name}' is not a scalar")));
    }
    *slot = replacement;
    let out: RunConfig = serde_json::from_value(doc).map_err(|e| Error::Config(format!("invalid swept config: {e}")))?;
    out.check()?;
    Ok(out)
}

fn opt(x: Option<f64>) -> String {
    x.map(num17).unwrap_or_default()
}

/// Run every value in its own subdirectory, `workers` at a time, then write `sweep.csv`.
pub fn sweep(cfg: &RunConfig, name: &str, values: &[f64], dir: &Path, workers: usize) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let configs: Vec<RunConfig> = values.iter().map(|&v| apply_parameter(cfg, name, v)).collect::<Result<_>>()?;
    let mut manifest = RunManifest::begin(dir, &cfg.hash(), cfg.seed, &["items", "aggregate"])?;
    manifest.set_stage("items", StageState::Running, None, None)?;
    let clock = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let outcomes: Vec<(String, RunOutcome)> = pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .with_max_len(1)
            .map(|(k, c)| {
                let sub = format!("item_{k:03}");
                let out = run(c, &dir.join(&sub));
                info!("{name} = {}: exit {}", values[k], out.exit_code);
                (sub, out)
            })
            .collect()
    });
    manifest.set_stage("items", StageState::Done, Some(clock.elapsed().as_secs_f64()), None)?;

    let mut rows = Vec::with_capacity(values.len());
    for (&value, (sub, out)) in values.iter().zip(&outcomes) {
        let s = out.summary.as_ref();
        rows.push(SweepRow {
            value,
            dir: sub.clone(),
            exit_code: out.exit_code,
            medium_id: s.map(|s| s.report.medium_id.clone()),
            w_under: s.map(|s| s.report.w_under),
            w_over: s.map(|s| s.report.w_over),
            w_star_emp: s.and_then(|s| s.report.w_star_emp),
            w_upper_emp: s.and_then(|s| s.report.w_upper_emp),
            verdict: s.map(|s| s.verdict),
            error: out.error.clone(),
        });
        if let Ok(item) = RunManifest::load(&out.dir) {
            for o in &item.outputs {
                manifest.record_existing(&format!("{sub}/{}", o.path))?;
            }
        }
        manifest.record_existing(&format!("{sub}/manifest.json"))?;
    }
    let mut csv = String::from("parameter,value,medium_id,w_under,w_over,w_star_emp,w_upper_emp,verdict,exit_code\n");
    for r in &rows {
        csv.push_str(&format!(
            "{name},{},{},{},{},{},{},{},{}\n",
            num17(r.value),
            r.medium_id.clone().unwrap_or_default(),
            opt(r.w_under),
            opt(r.w_over),
            opt(r.w_star_emp),
            opt(r.w_upper_emp),
            r.verdict.map(|v| v.to_string()).unwrap_or_default(),
            r.exit_code
        ));
    }
    manifest.add_output("sweep.csv", csv.as_bytes())?;
    manifest.set_stage("aggregate", StageState::Done, None, None)?;
    // Numerical or config failures outrank verdict failures.
    let exit_code = rows
        .iter()
        .map(|r| r.exit_code)
        .max_by_key(|&c| match c {
            0 => 0,
            1 => 1,
            _ => 2,
        })
        .unwrap_or(0);
    manifest.finalize(exit_code)?;
    Ok(SweepOutcome {
        dir: dir.to_path_buf(),
        exit_code,
        rows,
    })
}
