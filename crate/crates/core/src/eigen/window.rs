//! Windowed Hamiltonian estimates along an increasing `R` sequence. The windows
//! `(R, R_last + width)` share their right end, so they are nested like `(R, inf)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::Medium;

use super::{
    approximate_corrector, assemble_lp, lyapunov_inverse_k, periodic_principal_eigenvalue,
    richardson_lambda, CorrectorOptions, OperatorLp, PerronOptions, RiccatiOptions,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Engine {
    ConstTestfn,
    Periodic {
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    Corrector {
        #[serde(default = "default_epsilons")]
        epsilons: Vec<f64>,
        #[serde(default = "default_corrector_dx")]
        dx: f64,
    },
    Riccati {
        #[serde(default = "default_riccati_step")]
        step: f64,
    },
}

fn default_nodes() -> usize {
    512
}

fn default_epsilons() -> Vec<f64> {
    vec![0.2, 0.1, 0.05]
}

fn default_corrector_dx() -> f64 {
    0.05
}

fn default_riccati_step() -> f64 {
    0.01
}

impl Engine {
    pub fn as_str(&self) -> &'static str {
        match self {
            Engine::ConstTestfn => "const_testfn",
            Engine::Periodic { .. } => "periodic",
            Engine::Corrector { .. } => "corrector",
            Engine::Riccati { .. } => "riccati",
        }
    }

    /// Engines whose value does not depend on the window position.
    pub fn is_whole_line(&self) -> bool {
        matches!(self, Engine::Periodic { .. })
    }
}

#[derive(Clone, Debug)]
pub struct WindowOptions {
    pub r_sequence: Vec<f64>,
    pub width: f64,
    pub perron: PerronOptions,
    pub corrector: CorrectorOptions,
    pub riccati: RiccatiOptions,
    /// Floor for the engine tolerance used by the monotonicity check.
    pub tolerance: f64,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions {
            r_sequence: vec![10.0, 20.0, 40.0],
            width: 100.0,
            perron: PerronOptions::default(),
            corrector: CorrectorOptions::default(),
            riccati: RiccatiOptions::default(),
            tolerance: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowDiagnostic {
    pub r: f64,
    pub lower: f64,
    pub upper: f64,
    pub residual: f64,
    pub plateau: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowH {
    pub p: f64,
    pub engine: &'static str,
    pub h_under: f64,
    pub h_over: f64,
    pub residual: f64,
    pub plateau: bool,
    pub diagnostics: Vec<WindowDiagnostic>,
}

fn evaluate(medium: &Medium, p: f64, window: (f64, f64), engine: &Engine, opts: &WindowOptions, lattice: f64) -> Result<WindowDiagnostic> {
    let (lo, hi) = window;
    let diag = |lower: f64, upper: f64, residual: f64| WindowDiagnostic {
        r: lo,
        lower,
        upper,
        residual,
        plateau: false,
    };
    match engine {
        Engine::ConstTestfn => {
            let (l, u) = lattice_bounds(&assemble_lp(medium, p), window, lattice);
            Ok(diag(l, u, 0.0))
        }
        Engine::Periodic { nodes } => {
            let e = periodic_principal_eigenvalue(&assemble_lp(medium, p), *nodes, &opts.perron)?;
            Ok(diag(e.value, e.value, e.residual))
        }
        Engine::Corrector { epsilons, dx } => {
            let n = ((hi - lo) / dx).ceil() as usize;
            let sols = epsilons
                .iter()
                .map(|&eps| approximate_corrector(medium, p, eps, window, n, &opts.corrector))
                .collect::<Result<Vec<_>>>()?;
            let e = richardson_lambda(&sols, &opts.corrector)?;
            Ok(diag(e.value, e.value, e.residual))
        }
        Engine::Riccati { step } => {
            let mut ro = opts.riccati.clone();
            ro.step = *step;
            // H(p) for p > 0 is the inverse exponent of the mirrored medium.
            let k = if p <= 0.0 {
                lyapunov_inverse_k(medium, -p, window, &ro)?
            } else {
                lyapunov_inverse_k(&medium.reflected(), p, (-hi, -lo), &ro)?
            };
            let mut d = diag(k.estimate.value, k.estimate.value, k.estimate.residual);
            d.plateau = k.estimate.plateau;
            Ok(d)
        }
    }
}

/// Constant-test-function bounds on the points of a fixed lattice inside the window,
/// so that nested windows see nested sample sets.
fn lattice_bounds(op: &OperatorLp, window: (f64, f64), spacing: f64) -> (f64, f64) {
    let (lo, hi) = window;
    let k0 = (lo / spacing).ceil() as i64;
    let k1 = (hi / spacing).floor() as i64;
    let mut mn = op.zeroth_order(hi);
    let mut mx = mn;
    for k in k0..=k1 {
        let z = op.zeroth_order(k as f64 * spacing);
        mn = mn.min(z);
        mx = mx.max(z);
    }
    (mn, mx)
}

/// Lattice spacing: 0.01, coarsened by powers of two to keep about 2e5 samples in the widest window.
fn lattice_spacing(widest: f64) -> f64 {
    let mut h = 0.01;
    while widest / h > 200_000.0 {
        h *= 2.0;
    }
    h
}

/// Evaluate `engine` on `(R, R_last + width)` for every `R` of the sequence and keep the last values.
pub fn window_h(medium: &Medium, p: f64, engine: &Engine, opts: &WindowOptions) -> Result<WindowH> {
    if opts.r_sequence.is_empty() || opts.r_sequence.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("R sequence must be nonempty and increasing".into()));
    }
    if !(opts.width > 0.0) {
        return Err(Error::InvalidParameter(format!("window width {} must be positive", opts.width)));
    }
    let rs: &[f64] = if engine.is_whole_line() {
        &opts.r_sequence[..1]
    } else {
        &opts.r_sequence
    };
    let right = opts.r_sequence.last().unwrap() + opts.width;
    let lattice = lattice_spacing(right - rs[0]);
    let mut diagnostics: Vec<WindowDiagnostic> = Vec::with_capacity(rs.len());
    for &r in rs {
        let d = evaluate(medium, p, (r, right), engine, opts, lattice)?;
        if let Some(prev) = diagnostics.last() {
            let tol = 10.0 * opts.tolerance.max(prev.residual).max(d.residual);
            if d.lower < prev.lower - tol {
                return Err(Error::Monotonicity {
                    r,
                    detail: format!("lower estimate fell from {} to {}", prev.lower, d.lower),
                });
            }
            if d.upper > prev.upper + tol {
                return Err(Error::Monotonicity {
                    r,
                    detail: format!("upper estimate rose from {} to {}", prev.upper, d.upper),
                });
            }
        }
        diagnostics.push(d);
    }
    let last = diagnostics.last().unwrap();
    Ok(WindowH {
        p,
        engine: engine.as_str(),
        h_under: last.lower,
        h_over: last.upper,
        residual: last.residual,
        plateau: last.plateau,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Mode;

    #[test]
    fn compact_perturbation_collapses_past_support() {
        let m = Medium::compact_perturbation(0.25, -0.2, 5.0).unwrap();
        let w = window_h(&m, 1.0, &Engine::ConstTestfn, &WindowOptions::default()).unwrap();
        assert_eq!((w.h_under, w.h_over), (1.25, 1.25));
    }

    #[test]
    fn homogeneous_is_constant_in_r() {
        let m = Medium::homogeneous(1.0, 0.0, 1.0).unwrap();
        let w = window_h(&m, -0.5, &Engine::ConstTestfn, &WindowOptions::default()).unwrap();
        assert!(w.diagnostics.iter().all(|d| d.lower == 1.25 && d.upper == 1.25));
    }

    #[test]
    fn asymptotic_windows_approach_limit() {
        let limit_modes = [Mode::new(0.3, 1.0, 0.0), Mode::new(0.3, std::f64::consts::SQRT_2, 0.0)];
        let lim = Medium::almost_periodic(&[], &[], &limit_modes, [1.0, 0.0, 1.0]).unwrap();
        let m = Medium::asymptotic(&lim, 0.5, 0.1).unwrap();
        let opts = WindowOptions {
            r_sequence: vec![0.0, 60.0, 120.0],
            width: 2.0 * std::f64::consts::PI * 10.0,
            ..WindowOptions::default()
        };
        let eng = Engine::ConstTestfn;
        let wa = window_h(&m, 0.0, &eng, &opts).unwrap();
        let wl = window_h(&lim, 0.0, &eng, &opts).unwrap();
        let gap: Vec<f64> = wa
            .diagnostics
            .iter()
            .zip(&wl.diagnostics)
            .map(|(a, b)| (a.upper - b.upper).abs().max((a.lower - b.lower).abs()))
            .collect();
        assert!(gap[2] < 1e-4 && gap[2] <= gap[0], "{gap:?}");
    }

    #[test]
    fn periodic_engine_ignores_window() {
        let m = Medium::periodic(&[], &[], &[Mode::new(0.5, 1.0, 0.0)], 1.0, [1.0, 0.0, 1.0]).unwrap();
        let w = window_h(&m, 0.0, &Engine::Periodic { nodes: 256 }, &WindowOptions::default()).unwrap();
        assert_eq!(w.diagnostics.len(), 1);
        assert!(w.h_under > 0.5 && w.h_under < 1.5);
    }
}
