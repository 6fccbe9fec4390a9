use serde::Serialize;

use crate::error::{Error, Result};
use crate::pde::Trajectory;

use super::interp::{golden_min, MonotoneCubic};
use super::table::HamiltonianTable;

/// Convex conjugate `H*(q) = sup_p (p q - H_under(p))` sampled on a `q` grid.
#[derive(Clone, Debug, Serialize)]
pub struct LegendreTable {
    pub q_grid: Vec<f64>,
    pub h_star: Vec<f64>,
    pub argmax: Vec<f64>,
    #[serde(skip)]
    p_grid: Vec<f64>,
    #[serde(skip)]
    h: Vec<f64>,
}

fn conjugate_at(p_grid: &[f64], h: &[f64], interp: &MonotoneCubic, q: f64) -> Result<(f64, f64)> {
    let n = p_grid.len();
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..n {
        let v = p_grid[i] * q - h[i];
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    if best == 0 || best == n - 1 {
        return Err(Error::EdgeOptimum { p: p_grid[best] });
    }
    let (p, neg) = golden_min(|p| interp.eval(p) - p * q, p_grid[best - 1], p_grid[best + 1], 1e-12);
    Ok((-neg.min(-best_v), p))
}

pub fn legendre_conjugate(table: &HamiltonianTable, q_grid: &[f64]) -> Result<LegendreTable> {
    if q_grid.windows(2).any(|w| w[1] <= w[0]) || q_grid.is_empty() {
        return Err(Error::InvalidParameter("q grid must be nonempty and increasing".into()));
    }
    let interp = table.under_interp();
    let mut h_star = Vec::with_capacity(q_grid.len());
    let mut argmax = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let (v, p) = conjugate_at(&table.p_grid, &table.h_under, &interp, q)?;
        h_star.push(v);
        argmax.push(p);
    }
    Ok(LegendreTable {
        q_grid: q_grid.to_vec(),
        h_star,
        argmax,
        p_grid: table.p_grid.clone(),
        h: table.h_under.clone(),
    })
}

impl LegendreTable {
    /// `H*(q)` for any `q` inside the grid range.
    pub fn eval(&self, q: f64) -> Result<f64> {
        let (lo, hi) = (self.q_grid[0], *self.q_grid.last().unwrap());
        if q < lo - 1e-12 || q > hi + 1e-12 {
            return Err(Error::InvalidParameter(format!("q = {q} outside [{lo}, {hi}]")));
        }
        let interp = MonotoneCubic::new(&self.p_grid, &self.h);
        Ok(conjugate_at(&self.p_grid, &self.h, &interp, q)?.0)
    }

    /// Second conjugate `sup_q (p q - H*(q))` over the sampled `q` grid.
    pub fn biconjugate(&self, p: f64) -> f64 {
        self.q_grid
            .iter()
            .zip(&self.h_star)
            .map(|(q, hs)| p * q - hs)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// The lower-bound profile `x -> min(-t H*(-x/t), 0)`.
pub fn wkb_profile(legendre: &LegendreTable, t: f64, xs: &[f64]) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    let interp = MonotoneCubic::new(&legendre.p_grid, &legendre.h);
    let (lo, hi) = (legendre.q_grid[0], *legendre.q_grid.last().unwrap());
    xs.iter()
        .map(|&x| {
            let q = -x / t;
            if q < lo - 1e-12 || q > hi + 1e-12 {
                return Err(Error::InvalidParameter(format!("x = {x} maps to q = {q} outside [{lo}, {hi}]")));
            }
            let hs = conjugate_at(&legendre.p_grid, &legendre.h, &interp, q)?.0;
            Ok((-t * hs).min(0.0))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct WkbRow {
    pub epsilon: f64,
    /// `sup_x max(profile - Z_eps, 0)` on the grid.
    pub deviation: f64,
    pub worst_x: f64,
    /// Smallest `u(1/eps, x/eps)` over grid points with `0 <= x <= 0.9 w_under`.
    pub interior_min_u: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WkbReport {
    pub rows: Vec<WkbRow>,
}

impl WkbReport {
    pub fn final_not_above_first(&self) -> bool {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.deviation <= a.deviation,
            _ => false,
        }
    }
}

const LOG_FLOOR: f64 = 1e-300;

/// Compare `Z_eps(1, x) = eps ln u(1/eps, x/eps)` with the profile at `t = 1`.
pub fn wkb_compare(trajectory: &Trajectory, legendre: &LegendreTable, epsilons: &[f64], xs: &[f64], w_under: f64) -> Result<WkbReport> {
    let profile = wkb_profile(legendre, 1.0, xs)?;
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {eps} must be positive")));
        }
        let t = 1.0 / eps;
        if t > trajectory.t_final() + 0.5 * trajectory.dt {
            return Err(Error::TooShort(format!("need T >= {t}, have {}", trajectory.t_final())));
        }
        let state = trajectory
            .state_at(t)
            .ok_or_else(|| Error::TooShort(format!("no snapshot at t = {t}")))?;
        let mut deviation: f64 = 0.0;
        let mut worst_x = xs.first().copied().unwrap_or(0.0);
        let mut interior_min_u = f64::INFINITY;
        for (&x, &prof) in xs.iter().zip(&profile) {
            let u = state.value_at(x / eps);
            let z = eps * u.max(LOG_FLOOR).ln();
            let d = (prof - z).max(0.0);
            if d > deviation {
                deviation = d;
                worst_x = x;
            }
            if x >= 0.0 && x <= 0.9 * w_under {
                interior_min_u = interior_min_u.min(u);
            }
        }
        rows.push(WkbRow {
            epsilon: eps,
            deviation,
            worst_x,
            interior_min_u,
        });
    }
    Ok(WkbReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speed::table::default_p_grid;

    fn quadratic() -> LegendreTable {
        let t = HamiltonianTable::from_fn("h", default_p_grid(), |p| p * p + 1.0).unwrap();
        let q: Vec<f64> = (-12..=12).map(|k| k as f64 * 0.5).collect();
        legendre_conjugate(&t, &q).unwrap()
    }

    #[test]
    fn conjugate_of_quadratic() {
        let l = quadratic();
        for (q, v) in l.q_grid.iter().zip(&l.h_star) {
            assert!((v - (q * q / 4.0 - 1.0)).abs() < 1e-10, "q = {q}");
        }
        assert!(l.eval(-2.0).unwrap().abs() < 1e-10);
    }

    #[test]
    fn profile_examples() {
        let l = quadratic();
        let xs: Vec<f64> = (0..=30).map(|k| k as f64 * 0.1).collect();
        let prof = wkb_profile(&l, 1.0, &xs).unwrap();
        for (x, v) in xs.iter().zip(&prof) {
            let e = if *x <= 2.0 { 0.0 } else { -(x * x / 4.0 - 1.0) };
            assert!((v - e).abs() < 1e-9 && *v <= 0.0, "x = {x}");
        }
        let at2 = wkb_profile(&l, 2.0, &[5.0]).unwrap()[0];
        let at1 = wkb_profile(&l, 1.0, &[2.5]).unwrap()[0];
        assert!((at2 - 2.0 * at1).abs() < 1e-9);
        assert!(wkb_profile(&l, 1.0, &[100.0]).is_err());
    }

    #[test]
    fn conjugate_edge_is_reported() {
        let t = HamiltonianTable::from_fn("h", default_p_grid(), |p| p * p + 1.0).unwrap();
        assert!(matches!(legendre_conjugate(&t, &[20.0]), Err(Error::EdgeOptimum { .. })));
    }
}
