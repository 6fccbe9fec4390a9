//! Approximate correctors `a w'' + a (w' + p)^2 + q (w' + p) + c = eps w` with
//! periodic wrap, solved by damped Newton iteration.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, Tridiagonal};
use crate::media::Medium;

use super::{EigenEstimate, Method, Window};

#[derive(Clone, Debug)]
pub struct CorrectorOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the window dropped at each end when the wrap is not exact.
    pub core_margin: f64,
    pub dx_max: f64,
    /// Allowed non-monotonicity of band midpoints in the extrapolation.
    pub monotone_tol: f64,
}

impl Default for CorrectorOptions {
    fn default() -> Self {
        CorrectorOptions {
            tol: 1e-10,
            max_iter: 100,
            core_margin: 0.1,
            dx_max: 0.05,
            monotone_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrectorSolution {
    pub epsilon: f64,
    pub p: f64,
    pub window: (f64, f64),
    pub dx: f64,
    #[serde(skip)]
    pub u_samples: Vec<f64>,
    /// Min and max of `eps * w` over the window core.
    pub lambda_band: (f64, f64),
    /// Mean of `eps * w` over the whole window (the wrap has no boundary).
    pub lambda_mean: f64,
    pub newton_residual: f64,
    /// Max of `|L_p phi - eps w phi| / phi` for `phi = e^w`.
    pub testfn_residual: f64,
    /// True when the window is a whole number of periods.
    pub exact_wrap: bool,
    pub iterations: usize,
}

impl CorrectorSolution {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lambda_band.0 + self.lambda_band.1)
    }

    pub fn band_width(&self) -> f64 {
        self.lambda_band.1 - self.lambda_band.0
    }
}

struct Coeffs {
    a: Vec<f64>,
    q: Vec<f64>,
    c: Vec<f64>,
}

fn residual(w: &[f64], k: &Coeffs, p: f64, eps: f64, h: f64, out: &mut [f64]) -> f64 {
    let n = w.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let wl = w[(i + n - 1) % n];
        let wr = w[(i + 1) % n];
        let d2 = (wr - 2.0 * w[i] + wl) / (h * h);
        let g = (wr - wl) / (2.0 * h) + p;
        let f = k.a[i] * d2 + k.a[i] * g * g + k.q[i] * g + k.c[i] - eps * w[i];
        out[i] = f;
        worst = worst.max(f.abs());
    }
    worst
}

pub fn approximate_corrector(
    medium: &Medium,
    p: f64,
    epsilon: f64,
    window: (f64, f64),
    n: usize,
    opts: &CorrectorOptions,
) -> Result<CorrectorSolution> {
    let (lo, hi) = window;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
    }
    if !(lo < hi) || n < 3 {
        return Err(Error::InvalidParameter(format!("bad corrector window ({lo}, {hi}) with {n} nodes")));
    }
    let h = (hi - lo) / n as f64;
    if h > opts.dx_max {
        return Err(Error::InvalidParameter(format!("corrector spacing {h} exceeds {}", opts.dx_max)));
    }
    let xs: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
    let k = Coeffs {
        a: xs.iter().map(|&x| medium.a.value(x)).collect(),
        q: xs.iter().map(|&x| medium.q.value(x)).collect(),
        c: xs.iter().map(|&x| medium.c().value(x)).collect(),
    };
    let exact_wrap = medium
        .period()
        .map(|l| {
            let r = (hi - lo) / l;
            (r - r.round()).abs() < 1e-9 && r.round() >= 1.0
        })
        .unwrap_or(false);

    let mut w = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut f_trial = vec![0.0; n];
    let mut jac = Tridiagonal::zeros(n);
    let mut norm = residual(&w, &k, p, epsilon, h, &mut f);
    let mut iterations = 0;

    while norm > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence {
                method: "corrector Newton",
                iterations,
                defect: norm,
            });
        }
        iterations += 1;
        for i in 0..n {
            let wl = w[(i + n - 1) % n];
            let wr = w[(i + 1) % n];
            let b = 2.0 * k.a[i] * ((wr - wl) / (2.0 * h) + p) + k.q[i];
            jac.lower[i] = k.a[i] / (h * h) - b / (2.0 * h);
            jac.upper[i] = k.a[i] / (h * h) + b / (2.0 * h);
            jac.diag[i] = -2.0 * k.a[i] / (h * h) - epsilon;
        }
        let mut delta: Vec<f64> = f.iter().map(|v| -v).collect();
        jac.solve_cyclic(&mut delta)?;

        let mut step = 1.0;
        let mut accepted = false;
        while step >= 1e-8 {
            for i in 0..n {
                trial[i] = w[i] + step * delta[i];
            }
            let nt = residual(&trial, &k, p, epsilon, h, &mut f_trial);
            if nt < norm {
                std::mem::swap(&mut w, &mut trial);
                std::mem::swap(&mut f, &mut f_trial);
                norm = nt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // Stagnation at round-off level counts as convergence.
            if norm <= 1e3 * opts.tol {
                break;
            }
            return Err(Error::NoConvergence {
                method: "corrector Newton",
                iterations,
                defect: norm,
            });
        }
    }

    let (c0, c1) = if exact_wrap {
        (0, n)
    } else {
        let m = (opts.core_margin * n as f64).floor() as usize;
        (m, n - m)
    };
    let mut band = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &w[c0..c1] {
        band.0 = band.0.min(epsilon * v);
        band.1 = band.1.max(epsilon * v);
    }
    let mean = epsilon * w.iter().sum::<f64>() / n as f64;
    Ok(CorrectorSolution {
        epsilon,
        p,
        window,
        dx: h,
        u_samples: w,
        lambda_band: band,
        lambda_mean: mean,
        newton_residual: norm,
        testfn_residual: norm,
        exact_wrap,
        iterations,
    })
}

/// Extrapolate window means of `eps * w` to `eps = 0` with a least-squares line in `eps`.
/// The band midpoint tracks the same limit but is dominated by extremes on long random windows.
pub fn richardson_lambda(solutions: &[CorrectorSolution], opts: &CorrectorOptions) -> Result<EigenEstimate> {
    if solutions.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "extrapolation needs at least 3 solutions, got {}",
            solutions.len()
        )));
    }
    let p = solutions[0].p;
    let window = solutions[0].window;
    for s in solutions {
        if s.p != p || s.window != window {
            return Err(Error::Inconsistent(format!(
                "solutions mix p = {} / {} or windows {:?} / {:?}",
                p, s.p, window, s.window
            )));
        }
    }
    if solutions.windows(2).any(|w| w[1].epsilon >= w[0].epsilon) {
        return Err(Error::Inconsistent("epsilon must decrease along the list".into()));
    }
    let mids: Vec<f64> = solutions.iter().map(|s| s.lambda_mean).collect();
    let steps: Vec<f64> = mids.windows(2).map(|w| w[1] - w[0]).collect();
    let rising = steps.iter().any(|d| *d > opts.monotone_tol);
    let falling = steps.iter().any(|d| *d < -opts.monotone_tol);
    if rising && falling {
        return Err(Error::Inconsistent(format!("corrector means are not monotone in epsilon: {mids:?}")));
    }
    let rows: Vec<Vec<f64>> = solutions.iter().map(|s| vec![1.0, s.epsilon]).collect();
    let coef = least_squares(&rows, &mids).ok_or_else(|| Error::Inconsistent("degenerate epsilon list".into()))?;
    let last = solutions.last().unwrap();
    let win = if last.exact_wrap {
        Window::WholeLine
    } else {
        Window::Interval(window.0, window.1)
    };
    Ok(EigenEstimate::new(coef[0], Method::Corrector, win, last.band_width()))
}
