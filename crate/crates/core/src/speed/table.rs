use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{window_h, Engine, RiccatiSolver, WindowDiagnostic, WindowH, WindowOptions};
use crate::error::{Error, Result};
use crate::media::Medium;
use crate::num17;

use super::interp::{golden_min, MonotoneCubic};

/// Sampled `p -> (H_under(p), H_over(p))`.
#[derive(Clone, Debug, Serialize)]
pub struct HamiltonianTable {
    pub medium_id: String,
    pub engine: String,
    pub p_grid: Vec<f64>,
    pub h_under: Vec<f64>,
    pub h_over: Vec<f64>,
    pub residual: Vec<f64>,
    pub plateau: Vec<bool>,
    #[serde(skip)]
    pub diagnostics: Vec<Vec<WindowDiagnostic>>,
}

impl HamiltonianTable {
    /// Table from explicit rows, for closed-form Hamiltonians.
    pub fn from_rows(medium_id: &str, engine: &str, p_grid: Vec<f64>, h_under: Vec<f64>, h_over: Vec<f64>) -> Result<Self> {
        let n = p_grid.len();
        if n < 3 || h_under.len() != n || h_over.len() != n {
            return Err(Error::InvalidParameter("table rows need equal lengths >= 3".into()));
        }
        if p_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("p grid must be strictly increasing".into()));
        }
        Ok(HamiltonianTable {
            medium_id: medium_id.to_string(),
            engine: engine.to_string(),
            p_grid,
            h_under,
            h_over,
            residual: vec![0.0; n],
            plateau: vec![false; n],
            diagnostics: vec![Vec::new(); n],
        })
    }

    pub fn from_fn(medium_id: &str, p_grid: Vec<f64>, h: impl Fn(f64) -> f64) -> Result<Self> {
        let v: Vec<f64> = p_grid.iter().map(|&p| h(p)).collect();
        Self::from_rows(medium_id, "closed_form", p_grid, v.clone(), v)
    }

    pub fn len(&self) -> usize {
        self.p_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_grid.is_empty()
    }

    pub(crate) fn under_interp(&self) -> MonotoneCubic {
        MonotoneCubic::new(&self.p_grid, &self.h_under)
    }

    pub(crate) fn over_interp(&self) -> MonotoneCubic {
        MonotoneCubic::new(&self.p_grid, &self.h_over)
    }

    /// Columns `medium_id,engine,p,H_under,H_over`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "medium_id,engine,p,H_under,H_over")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.medium_id,
                self.engine,
                num17(self.p_grid[i]),
                num17(self.h_under[i]),
                num17(self.h_over[i])
            )?;
        }
        Ok(())
    }

    /// Per-window engine values, columns `medium_id,engine,p,R,value,residual`.
    pub fn write_eigen_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "medium_id,engine,p,R,value,residual")?;
        for (i, diags) in self.diagnostics.iter().enumerate() {
            let p = num17(self.p_grid[i]);
            for d in diags {
                if self.engine == "const_testfn" {
                    for (tag, v) in [("const_testfn_lower", d.lower), ("const_testfn_upper", d.upper)] {
                        writeln!(w, "{},{},{},{},{},{}", self.medium_id, tag, p, num17(d.r), num17(v), num17(d.residual))?;
                    }
                } else {
                    writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        self.medium_id,
                        self.engine,
                        p,
                        num17(d.r),
                        num17(d.lower),
                        num17(d.residual)
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// The default momentum grid: `[-4, 4]` in steps of 1/8.
pub fn default_p_grid() -> Vec<f64> {
    (-32..=32).map(|k| k as f64 * 0.125).collect()
}

#[derive(Clone, Debug)]
pub struct TablePolicy {
    pub p_grid: Vec<f64>,
    pub window: WindowOptions,
    /// Extra nodes added on each side of each minimizer (0 disables refinement).
    pub refine_points: usize,
}

impl Default for TablePolicy {
    fn default() -> Self {
        TablePolicy {
            p_grid: default_p_grid(),
            window: WindowOptions::default(),
            refine_points: 4,
        }
    }
}

fn evaluate_points(medium: &Medium, ps: &[f64], engine: &Engine, opts: &WindowOptions) -> Result<Vec<WindowH>> {
    if let Engine::Riccati { step } = engine {
        // One sampled solver per side serves every momentum.
        let mut ro = opts.riccati.clone();
        ro.step = *step;
        let right = opts.r_sequence.last().copied().unwrap_or(0.0) + opts.width;
        let r0 = opts.r_sequence.first().copied().unwrap_or(0.0);
        let (neg, pos) = (ps.iter().any(|&p| p <= 0.0), ps.iter().any(|&p| p > 0.0));
        let direct = if neg { Some(RiccatiSolver::new(medium, (r0, right), &ro)?) } else { None };
        if let Some(s) = &direct {
            ro.lambda1 = Some(s.lambda1());
        }
        let mirrored = if pos {
            Some(RiccatiSolver::new(&medium.reflected(), (-right, -r0), &ro)?)
        } else {
            None
        };
        return ps
            .par_iter()
            .map(|&p| {
                let k = if p <= 0.0 {
                    direct.as_ref().unwrap().inverse_k(-p)?
                } else {
                    mirrored.as_ref().unwrap().inverse_k(p)?
                };
                let e = k.estimate;
                let d = WindowDiagnostic {
                    r: r0,
                    lower: e.value,
                    upper: e.value,
                    residual: e.residual,
                    plateau: e.plateau,
                };
                Ok(WindowH {
                    p,
                    engine: engine.as_str(),
                    h_under: e.value,
                    h_over: e.value,
                    residual: e.residual,
                    plateau: e.plateau,
                    diagnostics: vec![d],
                })
            })
            .collect();
    }
    ps.par_iter().map(|&p| window_h(medium, p, engine, opts)).collect()
}

/// Evaluate the engine on the grid, then refine around the minimizers of `H(-p)/p`.
pub fn hamiltonian_table(medium: &Medium, engine: &Engine, policy: &TablePolicy) -> Result<HamiltonianTable> {
    let mut grid = policy.p_grid.clone();
    if grid.len() < 3 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("p grid must be strictly increasing with >= 3 points".into()));
    }
    let mut rows = evaluate_points(medium, &grid, engine, &policy.window)?;
    let build = |grid: &[f64], rows: &[WindowH]| HamiltonianTable {
        medium_id: medium.id.clone(),
        engine: engine.as_str().to_string(),
        p_grid: grid.to_vec(),
        h_under: rows.iter().map(|r| r.h_under).collect(),
        h_over: rows.iter().map(|r| r.h_over).collect(),
        residual: rows.iter().map(|r| r.residual).collect(),
        plateau: rows.iter().map(|r| r.plateau).collect(),
        diagnostics: rows.iter().map(|r| r.diagnostics.clone()).collect(),
    };
    let table = build(&grid, &rows);
    if policy.refine_points == 0 {
        return Ok(table);
    }
    let speed = spreading_speed(&table)?;
    let mut extra = Vec::new();
    for p_star in [speed.p_star_under, speed.p_star_over] {
        let i = grid.partition_point(|&v| v < -p_star);
        let (lo, hi) = (grid[i.saturating_sub(1)], grid[i.min(grid.len() - 1)]);
        let k = policy.refine_points;
        let h = (hi - lo) / (2 * k + 2) as f64;
        for j in 1..=(2 * k + 1) {
            extra.push(lo + j as f64 * h);
        }
    }
    extra.sort_by(|a, b| a.partial_cmp(b).unwrap());
    extra.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    extra.retain(|p| grid.iter().all(|g| (g - p).abs() > 1e-12));
    let more = evaluate_points(medium, &extra, engine, &policy.window)?;
    let mut merged: Vec<(f64, WindowH)> = grid.drain(..).zip(rows.drain(..)).chain(extra.into_iter().zip(more)).collect();
    merged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (g, r): (Vec<f64>, Vec<WindowH>) = merged.into_iter().unzip();
    Ok(build(&g, &r))
}

#[derive(Clone, Debug, Serialize)]
pub struct SpeedResult {
    pub w_under: f64,
    pub w_over: f64,
    pub p_star_under: f64,
    pub p_star_over: f64,
    pub engine: String,
}

/// Minimize `h(-p)/p` over `p > 0` on the interpolated row.
fn min_ratio(p_grid: &[f64], row: &[f64], interp: &MonotoneCubic) -> Result<(f64, f64)> {
    let neg: Vec<usize> = (0..p_grid.len()).filter(|&i| p_grid[i] < 0.0).collect();
    if neg.len() < 3 {
        return Err(Error::InvalidParameter("table needs at least 3 negative momenta".into()));
    }
    let ratio = |i: usize| row[i] / -p_grid[i];
    let best = neg.iter().copied().min_by(|&a, &b| ratio(a).partial_cmp(&ratio(b)).unwrap()).unwrap();
    let first = neg[0];
    let last = *neg.last().unwrap();
    if best == first || best == last {
        return Err(Error::EdgeOptimum { p: -p_grid[best] });
    }
    let (a, b) = (-p_grid[best + 1], -p_grid[best - 1]);
    let (p, w) = golden_min(|p| interp.eval(-p) / p, a, b, 1e-12);
    Ok((w, p))
}

pub fn spreading_speed(table: &HamiltonianTable) -> Result<SpeedResult> {
    let (w_under, p_star_under) = min_ratio(&table.p_grid, &table.h_under, &table.under_interp())?;
    let (w_over, p_star_over) = min_ratio(&table.p_grid, &table.h_over, &table.over_interp())?;
    Ok(SpeedResult {
        w_under,
        w_over,
        p_star_under,
        p_star_over,
        engine: table.engine.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_speeds() {
        let t = HamiltonianTable::from_fn("h", default_p_grid(), |p| p * p + 1.0).unwrap();
        let s = spreading_speed(&t).unwrap();
        assert!((s.w_under - 2.0).abs() < 1e-9 && (s.p_star_under - 1.0).abs() < 1e-5);

        let t = HamiltonianTable::from_fn("h", default_p_grid(), |p| 2.0 * p * p + 0.5).unwrap();
        let s = spreading_speed(&t).unwrap();
        assert!((s.w_over - 2.0).abs() < 1e-9 && (s.p_star_over - 0.5).abs() < 1e-5);

        let t = HamiltonianTable::from_fn("h", default_p_grid(), |p| p * p + 0.25).unwrap();
        let s = spreading_speed(&t).unwrap();
        assert!((s.w_under - 1.0).abs() < 1e-9 && (s.p_star_under - 0.5).abs() < 1e-5);
    }

    #[test]
    fn narrow_table_reports_edge() {
        let grid: Vec<f64> = (-8..=8).map(|k| k as f64 * 0.05).collect();
        let t = HamiltonianTable::from_fn("h", grid, |p| p * p + 1.0).unwrap();
        assert!(matches!(spreading_speed(&t), Err(Error::EdgeOptimum { .. })));
    }

    #[test]
    fn homogeneous_table_from_periodic_engine() {
        let m = Medium::homogeneous(1.0, 0.0, 1.0).unwrap();
        let policy = TablePolicy {
            p_grid: (-12..=12).map(|k| k as f64 * 0.25).collect(),
            ..TablePolicy::default()
        };
        let t = hamiltonian_table(&m, &Engine::Periodic { nodes: 64 }, &policy).unwrap();
        for (p, h) in t.p_grid.iter().zip(&t.h_under) {
            assert!((h - (p * p + 1.0)).abs() < 1e-10);
        }
        let s = spreading_speed(&t).unwrap();
        assert!((s.w_under - 2.0).abs() < 1e-6 && (s.w_over - 2.0).abs() < 1e-6);
    }

    #[test]
    fn compact_table_is_shifted_parabola() {
        let m = Medium::compact_perturbation(0.25, -0.2, 5.0).unwrap();
        let t = hamiltonian_table(&m, &Engine::ConstTestfn, &TablePolicy::default()).unwrap();
        for i in 0..t.len() {
            let p = t.p_grid[i];
            assert!((t.h_under[i] - (p * p + 0.25)).abs() < 1e-12 && (t.h_over[i] - (p * p + 0.25)).abs() < 1e-12);
        }
        let s = spreading_speed(&t).unwrap();
        assert!((s.w_under - 1.0).abs() < 1e-4 && (s.w_over - 1.0).abs() < 1e-4);
    }
}
