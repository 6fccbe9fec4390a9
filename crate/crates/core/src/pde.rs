//! Long-time integration of `u_t = a u_xx + q u_x + f(x, u)` on a
//! right-expanding truncated domain.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Tridiagonal, TridiagonalFactor};
use crate::media::Medium;
use crate::num17;

/// Overshoots up to this size are rounding and get clipped; larger ones are errors.
pub const CLIP_TOLERANCE: f64 = 1e-9;

/// Values below this are flushed to zero to keep subnormals out of the sweep.
const FLUSH_BELOW: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("grid needs n >= 3, got {n}")));
        }
        if !(dx > 0.0) || !dx.is_finite() || !x0.is_finite() {
            return Err(Error::InvalidParameter(format!("bad grid spacing dx = {dx}")));
        }
        Ok(Grid1D { x0, dx, n })
    }

    /// Smallest grid with spacing `dx` starting at `lo` and reaching `hi`.
    pub fn covering(lo: f64, hi: f64, dx: f64) -> Result<Self> {
        let n = ((hi - lo) / dx).ceil() as usize + 1;
        Self::new(lo, dx, n.max(3))
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct State {
    pub t: f64,
    pub grid: Grid1D,
    pub u: Vec<f64>,
}

impl State {
    pub fn new(t: f64, grid: Grid1D, u: Vec<f64>) -> Result<Self> {
        if u.len() != grid.n {
            return Err(Error::Mismatch(format!("{} values for {} nodes", u.len(), grid.n)));
        }
        if let Some((i, &v)) = u.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("u = {v} at node {i} is outside [0, 1]")));
        }
        Ok(State { t, grid, u })
    }

    pub fn from_fn(t: f64, grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let u = (0..grid.n).map(|i| f(grid.x(i))).collect();
        Self::new(t, grid, u)
    }

    /// Linear interpolation; zero outside the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let s = (x - self.grid.x0) / self.grid.dx;
        if s < 0.0 || s > (self.grid.n - 1) as f64 {
            return 0.0;
        }
        let i = (s.floor() as usize).min(self.grid.n - 2);
        let w = s - i as f64;
        self.u[i] * (1.0 - w) + self.u[i + 1] * w
    }

    /// `sup {x : u(x) >= level}` with linear interpolation to the next node.
    pub fn front_position(&self, level: f64) -> Option<f64> {
        let i = self.u.iter().rposition(|&v| v >= level)?;
        if i + 1 == self.u.len() {
            return Some(self.grid.x(i));
        }
        let (ui, uj) = (self.u[i], self.u[i + 1]);
        Some(self.grid.x(i) + self.grid.dx * (ui - level) / (ui - uj))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeftBoundary {
    /// Dirichlet zero throughout.
    Zero,
    /// Dirichlet zero until the monitor node is invaded, then Dirichlet one.
    OneWhenInvaded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dx: f64,
    pub dt: f64,
    /// Implicitness of the diffusion-advection part.
    pub theta: f64,
    /// Buffer kept ahead of the front before the domain grows.
    pub right_margin: f64,
    pub left_buffer: f64,
    /// Nodes appended per expansion.
    pub growth_chunk: usize,
    /// The domain grows once u exceeds this anywhere in the right margin.
    pub expand_threshold: f64,
    pub left_boundary: LeftBoundary,
    /// Times at which full states are kept.
    pub snapshot_times: Vec<f64>,
    /// Spacing of front-position records.
    pub front_interval: f64,
    pub max_nodes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dx: 0.1,
            dt: 0.02,
            theta: 1.0,
            right_margin: 20.0,
            left_buffer: 40.0,
            growth_chunk: 400,
            expand_threshold: 1e-10,
            left_boundary: LeftBoundary::OneWhenInvaded,
            snapshot_times: Vec::new(),
            front_interval: 0.5,
            max_nodes: 4_000_000,
        }
    }
}

impl SolverConfig {
    pub fn check(&self, medium: &Medium) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.dx > 0.0) || !(self.dt > 0.0) {
            return bad(format!("dx = {} and dt = {} must be positive", self.dx, self.dt));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta = {} outside [0, 1]", self.theta));
        }
        if !(self.right_margin > 0.0) || self.growth_chunk == 0 {
            return bad("right_margin and growth_chunk must be positive".into());
        }
        if !(self.left_buffer >= 0.0) {
            return bad("left_buffer must be nonnegative".into());
        }
        let slope = medium.c().sampled_sup();
        if !(self.dt * slope < 1.0) {
            return bad(format!("dt * max reaction slope = {} must be below 1", self.dt * slope));
        }
        Ok(())
    }
}

/// Compactly supported initial data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDatum {
    Indicator {
        lo: f64,
        hi: f64,
        #[serde(default = "unit")]
        height: f64,
    },
    Zero,
}

fn unit() -> f64 {
    1.0
}

impl Default for InitialDatum {
    fn default() -> Self {
        InitialDatum::Indicator {
            lo: -1.0,
            hi: 1.0,
            height: 1.0,
        }
    }
}

impl InitialDatum {
    fn support(&self) -> (f64, f64) {
        match self {
            InitialDatum::Indicator { lo, hi, .. } => (*lo, *hi),
            InitialDatum::Zero => (0.0, 0.0),
        }
    }

    fn value(&self, x: f64) -> f64 {
        match self {
            InitialDatum::Indicator { lo, hi, height } => {
                if x >= *lo && x <= *hi {
                    *height
                } else {
                    0.0
                }
            }
            InitialDatum::Zero => 0.0,
        }
    }

    fn check(&self) -> Result<()> {
        if let InitialDatum::Indicator { lo, hi, height } = self {
            if !(lo < hi) || !(0.0..=1.0).contains(height) {
                return Err(Error::InvalidParameter(format!(
                    "indicator datum needs lo < hi and height in [0, 1], got ({lo}, {hi}, {height})"
                )));
            }
        }
        Ok(())
    }
}

/// Presampled coefficients and the factored implicit matrix for one grid.
struct Stepper<'m> {
    medium: &'m Medium,
    grid: Grid1D,
    dt: f64,
    theta: f64,
    xs: Vec<f64>,
    c: Vec<f64>,
    /// Spatial operator (rows 1..n-1), off-diagonals nonnegative.
    op: Tridiagonal,
    factor: TridiagonalFactor,
}

impl<'m> Stepper<'m> {
    fn new(medium: &'m Medium, grid: Grid1D, dt: f64, theta: f64) -> Result<Self> {
        let mut s = Stepper {
            medium,
            grid,
            dt,
            theta,
            xs: Vec::new(),
            c: Vec::new(),
            op: Tridiagonal::default(),
            factor: TridiagonalFactor::default(),
        };
        s.sample_nodes(0, grid.n);
        s.refactor()?;
        Ok(s)
    }

    fn sample_nodes(&mut self, from: usize, to: usize) {
        let dx = self.grid.dx;
        let inv2 = 1.0 / (dx * dx);
        for i in from..to {
            let x = self.grid.x(i);
            let a = self.medium.a.value(x);
            let q = self.medium.q.value(x);
            // Upwind drift: forward difference for q > 0, backward for q < 0.
            let lo = a * inv2 + (-q).max(0.0) / dx;
            let up = a * inv2 + q.max(0.0) / dx;
            self.xs.push(x);
            self.c.push(self.medium.c().value(x));
            self.op.lower.push(lo);
            self.op.upper.push(up);
            self.op.diag.push(-(lo + up));
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let n = self.grid.n;
        let k = self.theta * self.dt;
        let mut m = Tridiagonal::zeros(n);
        m.diag[0] = 1.0;
        m.diag[n - 1] = 1.0;
        for i in 1..n - 1 {
            m.lower[i] = -k * self.op.lower[i];
            m.diag[i] = 1.0 - k * self.op.diag[i];
            m.upper[i] = -k * self.op.upper[i];
        }
        self.factor = TridiagonalFactor::new(&m)?;
        Ok(())
    }

    fn grow(&mut self, extra: usize) -> Result<()> {
        let old = self.grid.n;
        self.grid.n += extra;
        self.sample_nodes(old, self.grid.n);
        self.refactor()
    }

    /// One IMEX step; `u[0]` and `u[n-1]` are boundary values and stay put.
    /// Solved in increment form `(I - theta dt A) du = dt (A u + f(u))` with
    /// `A u` built from differences, so constant states are reproduced exactly.
    fn advance(&self, u: &mut [f64], rhs: &mut Vec<f64>, t: f64) -> Result<()> {
        let n = self.grid.n;
        let dt = self.dt;
        rhs.clear();
        rhs.push(0.0);
        for i in 1..n - 1 {
            let lap = self.op.lower[i] * (u[i - 1] - u[i]) + self.op.upper[i] * (u[i + 1] - u[i]);
            let react = self.medium.f.eval_with(self.c[i], self.xs[i], u[i]);
            rhs.push(dt * (lap + react));
        }
        rhs.push(0.0);
        self.factor.solve(rhs);
        for (i, (v, du)) in u.iter_mut().zip(rhs.iter()).enumerate() {
            let mut w = *v + du;
            if w < FLUSH_BELOW {
                if w < -CLIP_TOLERANCE || w.is_nan() {
                    return Err(Error::Unstable { t, node: i, value: w });
                }
                w = 0.0;
            } else if w > 1.0 {
                if w > 1.0 + CLIP_TOLERANCE {
                    return Err(Error::Unstable { t, node: i, value: w });
                }
                w = 1.0;
            }
            *v = w;
        }
        Ok(())
    }
}

/// One time step of the scheme, holding the boundary nodes fixed.
pub fn step(state: &State, medium: &Medium, config: &SolverConfig) -> Result<State> {
    config.check(medium)?;
    let stepper = Stepper::new(medium, state.grid, config.dt, config.theta)?;
    let mut u = state.u.clone();
    let mut rhs = Vec::with_capacity(u.len());
    stepper.advance(&mut u, &mut rhs, state.t)?;
    Ok(State {
        t: state.t + config.dt,
        grid: state.grid,
        u,
    })
}

/// Advance `steps` times on a fixed grid.
pub fn step_many(state: &State, medium: &Medium, config: &SolverConfig, steps: usize) -> Result<State> {
    config.check(medium)?;
    let stepper = Stepper::new(medium, state.grid, config.dt, config.theta)?;
    let mut u = state.u.clone();
    let mut rhs = Vec::with_capacity(u.len());
    for k in 0..steps {
        stepper.advance(&mut u, &mut rhs, state.t + k as f64 * config.dt)?;
    }
    Ok(State {
        t: state.t + steps as f64 * config.dt,
        grid: state.grid,
        u,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FrontRecord {
    pub t: f64,
    /// One entry per level; `None` when the level is not reached.
    pub positions: Vec<Option<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub medium_id: String,
    pub levels: Vec<f64>,
    pub dt: f64,
    pub snapshots: Vec<State>,
    pub front_records: Vec<FrontRecord>,
    pub final_state: State,
    /// Time at which the left boundary switched to one, if it did.
    pub left_switch_time: Option<f64>,
}

impl Trajectory {
    pub fn t_final(&self) -> f64 {
        self.final_state.t
    }

    /// Front series `(t, X_level(t))` for level index `k`, skipping absent records.
    pub fn front_series(&self, k: usize) -> Vec<(f64, f64)> {
        self.front_records
            .iter()
            .filter_map(|r| r.positions.get(k).copied().flatten().map(|x| (r.t, x)))
            .collect()
    }

    /// Snapshot at time `t` (within half a step), or the final state.
    pub fn state_at(&self, t: f64) -> Option<&State> {
        let tol = 0.5 * self.dt;
        if (self.final_state.t - t).abs() <= tol {
            return Some(&self.final_state);
        }
        self.snapshots.iter().find(|s| (s.t - t).abs() <= tol)
    }

    pub fn write_snapshots_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,u")?;
        for s in &self.snapshots {
            for (i, u) in s.u.iter().enumerate() {
                writeln!(w, "{},{},{}", num17(s.t), num17(s.grid.x(i)), num17(*u))?;
            }
        }
        Ok(())
    }

    pub fn write_fronts_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,level,x_front")?;
        for r in &self.front_records {
            for (lvl, x) in self.levels.iter().zip(&r.positions) {
                if let Some(x) = x {
                    writeln!(w, "{},{},{}", num17(r.t), num17(*lvl), num17(*x))?;
                }
            }
        }
        Ok(())
    }
}

/// Integrate from the datum to time `t_final`, growing the domain ahead of the front.
pub fn simulate(medium: &Medium, datum: &InitialDatum, t_final: f64, config: &SolverConfig, levels: &[f64]) -> Result<Trajectory> {
    config.check(medium)?;
    datum.check()?;
    if !(t_final > 0.0) {
        return Err(Error::InvalidParameter(format!("T = {t_final} must be positive")));
    }
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::InvalidParameter(format!("level {l} outside (0, 1)")));
    }
    let (lo, hi) = datum.support();
    let grid = Grid1D::covering(lo - config.left_buffer, hi + config.right_margin, config.dx)?;
    if grid.n > config.max_nodes {
        return Err(Error::MemoryCap { cap: config.max_nodes });
    }
    let mut stepper = Stepper::new(medium, grid, config.dt, config.theta)?;
    let mut u: Vec<f64> = (0..grid.n).map(|i| datum.value(grid.x(i))).collect();
    let last = u.len() - 1;
    u[0] = 0.0;
    u[last] = 0.0;

    let dt = config.dt;
    let total = (t_final / dt).round() as usize;
    let margin_nodes = ((config.right_margin / config.dx).ceil() as usize).max(2);
    let monitor = ((0.5 * config.left_buffer / config.dx).round() as usize).clamp(1, grid.n - 2);
    let front_every = ((config.front_interval / dt).round() as usize).max(1);
    let mut snap_steps: Vec<usize> = config
        .snapshot_times
        .iter()
        .filter(|t| **t >= 0.0 && **t <= t_final + 0.5 * dt)
        .map(|t| (t / dt).round() as usize)
        .collect();
    snap_steps.sort_unstable();
    snap_steps.dedup();

    let mut snapshots = Vec::with_capacity(snap_steps.len());
    let mut fronts = Vec::new();
    let mut left_switch_time = None;
    let mut rhs = Vec::with_capacity(u.len());
    let mut next_snap = 0;

    let record = |u: &[f64], g: Grid1D, t: f64| -> FrontRecord {
        let s = State { t, grid: g, u: u.to_vec() };
        FrontRecord {
            t,
            positions: levels.iter().map(|&l| s.front_position(l)).collect(),
        }
    };

    for k in 0..=total {
        let t = k as f64 * dt;
        if k > 0 {
            if config.left_boundary == LeftBoundary::OneWhenInvaded && left_switch_time.is_none() && u[monitor] > 0.999 {
                left_switch_time = Some(t - dt);
                u[0] = 1.0;
            }
            stepper.advance(&mut u, &mut rhs, t - dt)?;
            // Grow until the right margin is quiet again.
            loop {
                let n = stepper.grid.n;
                let tail = &u[n.saturating_sub(margin_nodes)..];
                if !tail.iter().any(|&v| v > config.expand_threshold) {
                    break;
                }
                let extra = config.growth_chunk.max(margin_nodes);
                if n + extra > config.max_nodes {
                    return Err(Error::MemoryCap { cap: config.max_nodes });
                }
                stepper.grow(extra)?;
                u.resize(n + extra, 0.0);
            }
        }
        let g = stepper.grid;
        while next_snap < snap_steps.len() && snap_steps[next_snap] == k {
            snapshots.push(State { t, grid: g, u: u.clone() });
            next_snap += 1;
        }
        if k % front_every == 0 || k == total {
            fronts.push(record(&u, g, t));
        }
    }

    let final_state = State {
        t: total as f64 * dt,
        grid: stepper.grid,
        u,
    };
    Ok(Trajectory {
        medium_id: medium.id.clone(),
        levels: levels.to_vec(),
        dt,
        snapshots,
        front_records: fronts,
        final_state,
        left_switch_time,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderingReport {
    /// `u_a <= u_b + tol` everywhere.
    pub ordered: bool,
    pub identical: bool,
    /// Largest `u_a - u_b` seen (negative when strictly ordered).
    pub worst_violation: f64,
    pub worst_t: f64,
    pub worst_x: f64,
}

/// Checks `u_a <= u_b` at every shared node and snapshot. Nodes present in only
/// one trajectory compare against the zero the shorter one holds there.
pub fn compare_solutions(a: &Trajectory, b: &Trajectory, tol: f64) -> Result<OrderingReport> {
    if a.medium_id != b.medium_id {
        return Err(Error::Mismatch(format!("media {} and {}", a.medium_id, b.medium_id)));
    }
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::Mismatch("different snapshot counts".into()));
    }
    let pairs = a
        .snapshots
        .iter()
        .zip(&b.snapshots)
        .chain(std::iter::once((&a.final_state, &b.final_state)));
    let mut rep = OrderingReport {
        ordered: true,
        identical: true,
        worst_violation: f64::NEG_INFINITY,
        worst_t: f64::NAN,
        worst_x: f64::NAN,
    };
    for (sa, sb) in pairs {
        if (sa.t - sb.t).abs() > 1e-9 || sa.grid.x0 != sb.grid.x0 || sa.grid.dx != sb.grid.dx {
            return Err(Error::Mismatch(format!("snapshot at t = {} vs t = {}", sa.t, sb.t)));
        }
        if sa.u.len() != sb.u.len() {
            rep.identical = false;
        }
        let n = sa.u.len().max(sb.u.len());
        for i in 0..n {
            let ua = sa.u.get(i).copied().unwrap_or(0.0);
            let ub = sb.u.get(i).copied().unwrap_or(0.0);
            if ua != ub {
                rep.identical = false;
            }
            let d = ua - ub;
            if d > rep.worst_violation {
                rep.worst_violation = d;
                rep.worst_t = sa.t;
                rep.worst_x = sa.grid.x(i);
            }
        }
    }
    rep.ordered = rep.worst_violation <= tol;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Medium;

    fn hom() -> Medium {
        Medium::homogeneous(1.0, 0.0, 1.0).unwrap()
    }

    fn small_grid() -> Grid1D {
        Grid1D::new(-5.0, 0.1, 101).unwrap()
    }

    #[test]
    fn zero_and_one_are_fixed_points() {
        let cfg = SolverConfig::default();
        for v in [0.0, 1.0] {
            let s = State::from_fn(0.0, small_grid(), |_| v).unwrap();
            let s1 = step(&s, &hom(), &cfg).unwrap();
            assert!(s1.u.iter().all(|&x| x == v));
        }
    }

    #[test]
    fn small_constant_follows_logistic_ode() {
        let delta = 1e-3;
        let cfg = SolverConfig::default();
        let s = State::from_fn(0.0, small_grid(), |_| delta).unwrap();
        let s1 = step(&s, &hom(), &cfg).unwrap();
        // Scalar RK4 for u' = u(1-u) over one step.
        let f = |u: f64| u * (1.0 - u);
        let h = cfg.dt;
        let k1 = f(delta);
        let k2 = f(delta + 0.5 * h * k1);
        let k3 = f(delta + 0.5 * h * k2);
        let k4 = f(delta + h * k3);
        let ode = delta + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        // Away from the held boundary values the implicit coupling is negligible.
        for i in 30..70 {
            assert!((s1.u[i] - ode).abs() < 2.0 * h * h * delta, "node {i}");
        }
    }

    #[test]
    fn front_position_interpolates() {
        let g = Grid1D::new(0.0, 1.0, 4).unwrap();
        let s = State::new(0.0, g, vec![1.0, 0.8, 0.2, 0.0]).unwrap();
        assert!((s.front_position(0.5).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(s.front_position(0.9), Some(0.0 + 1.0 * (1.0 - 0.9) / (1.0 - 0.8)));
        let z = State::new(0.0, g, vec![0.0; 4]).unwrap();
        assert_eq!(z.front_position(0.5), None);
    }

    #[test]
    fn zero_datum_gives_empty_fronts() {
        let tr = simulate(&hom(), &InitialDatum::Zero, 5.0, &SolverConfig::default(), &[0.5]).unwrap();
        assert!(tr.final_state.u.iter().all(|&v| v == 0.0));
        assert!(tr.front_records.iter().all(|r| r.positions[0].is_none()));
    }

    #[test]
    fn local_convergence_to_one() {
        let tr = simulate(&hom(), &InitialDatum::default(), 50.0, &SolverConfig::default(), &[0.5]).unwrap();
        assert!(tr.final_state.value_at(0.0) > 0.99);
        let s = tr.front_series(0);
        assert!(s.windows(2).skip(20).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn memory_cap_is_enforced() {
        let cfg = SolverConfig {
            max_nodes: 2000,
            ..SolverConfig::default()
        };
        let r = simulate(&hom(), &InitialDatum::default(), 100.0, &cfg, &[0.5]);
        assert!(matches!(r, Err(Error::MemoryCap { .. })));
    }

    #[test]
    fn overshoot_is_an_error() {
        // Fully explicit diffusion far beyond its stability limit.
        let cfg = SolverConfig {
            theta: 0.0,
            dt: 0.5,
            ..SolverConfig::default()
        };
        let g = small_grid();
        let s = State::from_fn(0.0, g, |x| if x.abs() < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let m = Medium::homogeneous(1.0, 0.0, 1.0).unwrap();
        assert!(matches!(step(&s, &m, &cfg), Err(Error::Unstable { .. })));
    }

    #[test]
    fn ordering_of_identical_runs() {
        let cfg = SolverConfig {
            snapshot_times: vec![1.0, 2.0],
            ..SolverConfig::default()
        };
        let a = simulate(&hom(), &InitialDatum::default(), 3.0, &cfg, &[0.5]).unwrap();
        let b = simulate(&hom(), &InitialDatum::default(), 3.0, &cfg, &[0.5]).unwrap();
        let r = compare_solutions(&a, &b, 0.0).unwrap();
        assert!(r.identical && r.ordered);
        let c = simulate(&hom(), &InitialDatum::Indicator { lo: -1.0, hi: 1.0, height: 0.5 }, 3.0, &cfg, &[0.5]).unwrap();
        let r = compare_solutions(&c, &a, 1e-10).unwrap();
        assert!(r.ordered && !r.identical);
        let r = compare_solutions(&a, &c, 1e-10).unwrap();
        assert!(!r.ordered);
    }

    #[test]
    fn mismatched_runs_are_rejected() {
        let cfg = SolverConfig {
            snapshot_times: vec![1.0],
            ..SolverConfig::default()
        };
        let a = simulate(&hom(), &InitialDatum::default(), 2.0, &cfg, &[0.5]).unwrap();
        let cfg2 = SolverConfig {
            dx: 0.05,
            ..cfg
        };
        let b = simulate(&hom(), &InitialDatum::default(), 2.0, &cfg2, &[0.5]).unwrap();
        assert!(matches!(compare_solutions(&a, &b, 0.0), Err(Error::Mismatch(_))));
    }

    #[test]
    fn csv_exports() {
        let cfg = SolverConfig {
            snapshot_times: vec![0.5],
            ..SolverConfig::default()
        };
        let tr = simulate(&hom(), &InitialDatum::default(), 1.0, &cfg, &[0.5]).unwrap();
        let mut buf = Vec::new();
        tr.write_fronts_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,level,x_front\n"));
        let mut buf = Vec::new();
        tr.write_snapshots_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + tr.snapshots[0].grid.n);
    }
}
