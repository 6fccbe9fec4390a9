use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::pde::{State, Trajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmpiricalOptions {
    pub delta: f64,
    /// Start of the analysis window as a fraction of the final time.
    pub window_start: f64,
    /// Fit `x = w t - k ln t + b` in addition to the straight line.
    pub log_correction: bool,
    /// Minimum distance of the final front from either grid end, in cells.
    pub boundary_cells: usize,
}

impl Default for EmpiricalOptions {
    fn default() -> Self {
        EmpiricalOptions {
            delta: 0.05,
            window_start: 0.5,
            log_correction: true,
            boundary_cells: 50,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelFit {
    pub level: f64,
    pub slope: f64,
    pub residual: f64,
    /// Slope of the fit with the logarithmic term, when requested.
    pub slope_log: Option<f64>,
    pub log_coefficient: Option<f64>,
    pub residual_log: Option<f64>,
    pub window: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct FrontSpeedEstimate {
    pub levels: Vec<LevelFit>,
    pub w_star_emp: Option<f64>,
    pub w_upper_emp: Option<f64>,
    pub t_final: f64,
    pub window: (f64, f64),
    pub snapshots_used: usize,
    pub flags: Vec<String>,
}

impl FrontSpeedEstimate {
    /// Fitted slopes agree within twice their combined residual.
    pub fn slopes_flat(&self) -> bool {
        self.levels.iter().all(|a| {
            self.levels
                .iter()
                .all(|b| (a.slope - b.slope).abs() <= 2.0 * (a.residual + b.residual) + 1e-12)
        })
    }
}

/// First node with `x >= 0` where `|u - 1| > delta`, as a position.
fn invaded_edge(s: &State, delta: f64) -> f64 {
    for i in 0..s.grid.n {
        let x = s.grid.x(i);
        if x >= 0.0 && (s.u[i] - 1.0).abs() > delta {
            return x;
        }
    }
    f64::INFINITY
}

/// Last node where `u > delta`; the last node counts for everything beyond the grid.
fn leading_edge(s: &State, delta: f64) -> Option<f64> {
    let n = s.grid.n;
    if s.u[n - 1] > delta {
        return None;
    }
    (0..n).rev().find(|&i| s.u[i] > delta).map(|i| s.grid.x(i)).or(Some(f64::NEG_INFINITY))
}

fn fit(series: &[(f64, f64)], log: bool) -> Option<(Vec<f64>, f64)> {
    let rows: Vec<Vec<f64>> = series
        .iter()
        .map(|&(t, _)| if log { vec![t, -t.ln(), 1.0] } else { vec![t, 1.0] })
        .collect();
    let y: Vec<f64> = series.iter().map(|s| s.1).collect();
    let coef = least_squares(&rows, &y)?;
    let rms = (rows
        .iter()
        .zip(&y)
        .map(|(r, v)| {
            let f: f64 = r.iter().zip(&coef).map(|(a, b)| a * b).sum();
            (f - v).powi(2)
        })
        .sum::<f64>()
        / y.len() as f64)
        .sqrt();
    Some((coef, rms))
}

/// Sup-criteria speeds over snapshots in `[window_start T, T]` plus slope fits per level.
pub fn empirical_speeds(trajectory: &Trajectory, w_grid: &[f64], opts: &EmpiricalOptions) -> Result<FrontSpeedEstimate> {
    if !(opts.delta > 0.0 && opts.delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {} outside (0, 1)", opts.delta)));
    }
    if w_grid.is_empty() || w_grid.windows(2).any(|w| w[1] <= w[0]) || w_grid[0] <= 0.0 {
        return Err(Error::InvalidParameter("w grid must be positive and increasing".into()));
    }
    let t_final = trajectory.t_final();
    let t0 = opts.window_start * t_final;
    let mut states: Vec<&State> = trajectory.snapshots.iter().filter(|s| s.t >= t0 && s.t > 0.0).collect();
    if states.last().is_none_or(|s| (s.t - t_final).abs() > 0.5 * trajectory.dt) {
        states.push(&trajectory.final_state);
    }
    let mut flags = Vec::new();

    let fin = &trajectory.final_state;
    if let Some(x) = fin.front_position(0.5) {
        let cells_left = (x - fin.grid.x0) / fin.grid.dx;
        let cells_right = (fin.grid.x_max() - x) / fin.grid.dx;
        if cells_left < opts.boundary_cells as f64 || cells_right < opts.boundary_cells as f64 {
            flags.push(format!("front at {x} is within {} cells of the boundary", opts.boundary_cells));
        }
    }

    // s1(w, t) <= delta iff w t < edge1(t); s2(w, t) <= delta iff w t > edge2(t).
    let mut star: Option<f64> = None;
    let mut upper_ok = vec![true; w_grid.len()];
    let mut star_ok = vec![true; w_grid.len()];
    for s in &states {
        let e1 = invaded_edge(s, opts.delta);
        let e2 = leading_edge(s, opts.delta);
        for (j, &w) in w_grid.iter().enumerate() {
            let x = w * s.t;
            if !(x < e1) {
                star_ok[j] = false;
            }
            match e2 {
                Some(e) if x > e => {}
                _ => upper_ok[j] = false,
            }
        }
    }
    for (j, &w) in w_grid.iter().enumerate() {
        if star_ok[j] {
            star = Some(w);
        } else {
            break;
        }
    }
    let upper = w_grid.iter().zip(&upper_ok).find(|(_, ok)| **ok).map(|(w, _)| *w);
    if star.is_none() {
        flags.push("no w satisfies the invasion criterion".into());
    }
    if upper.is_none() {
        flags.push("no w satisfies the leading-edge criterion".into());
    }
    if star.is_none() && upper.is_none() {
        return Err(Error::TooShort("neither sup criterion is satisfied on the w grid".into()));
    }

    let mut levels = Vec::with_capacity(trajectory.levels.len());
    for (k, &level) in trajectory.levels.iter().enumerate() {
        let series: Vec<(f64, f64)> = trajectory.front_series(k).into_iter().filter(|(t, _)| *t >= t0 && *t > 0.0).collect();
        if series.len() < 4 {
            flags.push(format!("level {level}: too few front records for a fit"));
            continue;
        }
        let (lin, res) = fit(&series, false).ok_or_else(|| Error::TooShort("degenerate front series".into()))?;
        let logfit = if opts.log_correction { fit(&series, true) } else { None };
        levels.push(LevelFit {
            level,
            slope: lin[0],
            residual: res,
            slope_log: logfit.as_ref().map(|f| f.0[0]),
            log_coefficient: logfit.as_ref().map(|f| f.0[1]),
            residual_log: logfit.as_ref().map(|f| f.1),
            window: (series[0].0, series.last().unwrap().0),
        });
    }

    Ok(FrontSpeedEstimate {
        levels,
        w_star_emp: star,
        w_upper_emp: upper,
        t_final,
        window: (t0, t_final),
        snapshots_used: states.len(),
        flags,
    })
}

/// `0.01, 0.02, ..., w_max`.
pub fn default_w_grid(w_max: f64) -> Vec<f64> {
    let n = (w_max / 0.01).round() as usize;
    (1..=n).map(|k| k as f64 * 0.01).collect()
}
