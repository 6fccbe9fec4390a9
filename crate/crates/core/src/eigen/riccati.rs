//! Lyapunov exponents of `(a u')' + c u = gamma u` through the Riccati variable
//! `s = a u'/u`, which solves `s' = gamma - c - s^2 / a`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::media::Medium;

use super::{dirichlet_principal_eigenvalue, EigenEstimate, Method, Window};

#[derive(Clone, Debug)]
pub struct RiccatiOptions {
    /// Integration step (shrunk to divide the period for periodic media).
    pub step: f64,
    /// Fraction of the span next to the starting point that is discarded.
    pub burn_in: f64,
    /// Node spacing of the Dirichlet threshold computation.
    pub dirichlet_dx: f64,
    /// Precomputed threshold; skips the Dirichlet solve when set.
    pub lambda1: Option<f64>,
    pub plateau_delta: f64,
    pub plateau_threshold: f64,
    pub bisect_tol: f64,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        RiccatiOptions {
            step: 0.01,
            burn_in: 0.2,
            dirichlet_dx: 0.05,
            lambda1: None,
            plateau_delta: 1e-3,
            plateau_threshold: 1e-3,
            bisect_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RiccatiTrace {
    pub gamma: f64,
    #[serde(skip)]
    pub r_samples: Vec<f64>,
    pub mu: f64,
    pub averaging_window: (f64, f64),
}

/// Coefficients sampled at half steps across the span.
struct Samples {
    x_lo: f64,
    h: f64,
    steps: usize,
    a: Vec<f64>,
    c: Vec<f64>,
    inf_a: f64,
    inf_c: f64,
    sup_c: f64,
    retained_steps: usize,
}

impl Samples {
    fn new(medium: &Medium, span: (f64, f64), opts: &RiccatiOptions) -> Result<Self> {
        let (x_lo, x_hi) = span;
        if !(x_lo < x_hi) {
            return Err(Error::InvalidParameter(format!("empty span ({x_lo}, {x_hi})")));
        }
        let len = x_hi - x_lo;
        let mut h = opts.step;
        let period = medium.period().filter(|_| !medium.is_homogeneous());
        if let Some(l) = period {
            h = l / (l / h).ceil();
        }
        let steps = (len / h).round() as usize;
        let h = len / steps as f64;
        let a: Vec<f64> = (0..=2 * steps).map(|k| medium.a.value(x_lo + 0.5 * h * k as f64)).collect();
        let c: Vec<f64> = (0..=2 * steps).map(|k| medium.c().value(x_lo + 0.5 * h * k as f64)).collect();
        let inf_a = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let inf_c = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let sup_c = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut retained = ((1.0 - opts.burn_in) * steps as f64).floor() as usize;
        if let Some(l) = period {
            let per = (l / h).round() as usize;
            if retained >= per {
                retained -= retained % per;
            }
        }
        if retained == 0 {
            return Err(Error::InvalidParameter("span too short for the burn-in".into()));
        }
        Ok(Samples {
            x_lo,
            h,
            steps,
            a,
            c,
            inf_a,
            inf_c,
            sup_c,
            retained_steps: retained,
        })
    }

    /// Integrate backward from the right end and average `r = s / a` over the retained part.
    fn mu(&self, gamma: f64) -> Result<(f64, Vec<f64>)> {
        let n = self.steps;
        let h = self.h;
        let bound = 10.0
            * (((gamma - self.inf_c).max(0.0) / self.inf_a).sqrt() + ((self.sup_c - gamma).max(0.0) / self.inf_a).sqrt() + 1.0);
        let rhs = |k2: usize, s: f64| gamma - self.c[k2] - s * s / self.a[k2];
        let a_end = self.a[2 * n];
        let mut s = -(a_end * (gamma - self.c[2 * n]).max(0.0)).sqrt();
        let mut r = vec![0.0; n + 1];
        r[n] = s / a_end;
        for k in (0..n).rev() {
            // Step from node k+1 to node k with step -h; half-step samples at 2k+1.
            let k1 = rhs(2 * k + 2, s);
            let k2 = rhs(2 * k + 1, s - 0.5 * h * k1);
            let k3 = rhs(2 * k + 1, s - 0.5 * h * k2);
            let k4 = rhs(2 * k, s - h * k3);
            s -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let rk = s / self.a[2 * k];
            if !rk.is_finite() || rk.abs() > bound {
                return Err(Error::RiccatiBlowUp {
                    x: self.x_lo + k as f64 * h,
                    r: rk,
                });
            }
            r[k] = rk;
        }
        let m = self.retained_steps;
        let mut sum = 0.5 * (r[0] + r[m]);
        for v in &r[1..m] {
            sum += v;
        }
        Ok((-sum / m as f64, r))
    }
}

fn threshold(medium: &Medium, span: (f64, f64), opts: &RiccatiOptions) -> Result<f64> {
    if let Some(l) = opts.lambda1 {
        return Ok(l);
    }
    let n = (((span.1 - span.0) / opts.dirichlet_dx) as usize).max(16);
    Ok(dirichlet_principal_eigenvalue(medium, span, n)?.value)
}

fn require_divergence(medium: &Medium) -> Result<()> {
    if !medium.divergence_form {
        return Err(Error::InvalidMedium(format!(
            "medium {} is not in divergence form (q = a')",
            medium.id
        )));
    }
    Ok(())
}

pub fn riccati_mu(medium: &Medium, gamma: f64, span: (f64, f64), opts: &RiccatiOptions) -> Result<RiccatiTrace> {
    require_divergence(medium)?;
    let lambda1 = threshold(medium, span, opts)?;
    if !(gamma > lambda1) {
        return Err(Error::BelowThreshold { gamma, threshold: lambda1 });
    }
    let smp = Samples::new(medium, span, opts)?;
    let (mu, r) = smp.mu(gamma)?;
    Ok(RiccatiTrace {
        gamma,
        r_samples: r,
        mu,
        averaging_window: (span.0, span.0 + smp.retained_steps as f64 * smp.h),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct KEstimate {
    pub estimate: EigenEstimate,
    pub lambda1: f64,
    pub rho_r: f64,
}

/// Sampled medium, threshold and plateau edge for repeated inversions on one span.
pub struct RiccatiSolver {
    smp: Samples,
    span: (f64, f64),
    lambda1: f64,
    rho_r: f64,
    q_abs_max: f64,
    opts: RiccatiOptions,
}

impl RiccatiSolver {
    pub fn new(medium: &Medium, span: (f64, f64), opts: &RiccatiOptions) -> Result<Self> {
        require_divergence(medium)?;
        let lambda1 = threshold(medium, span, opts)?;
        let smp = Samples::new(medium, span, opts)?;
        let q_abs_max = (0..=2 * smp.steps)
            .map(|k| medium.q.value(smp.x_lo + 0.5 * smp.h * k as f64).abs())
            .fold(0.0, f64::max);
        // Plateau edge: mu near the threshold, extrapolated with a square-root model
        // mu(lambda1 + d) ~ rho + C sqrt(d) from d = delta and d = delta / 4.
        let d = opts.plateau_delta * (1.0 + lambda1.abs());
        let mu_at = |g: f64| smp.mu(g).ok().map(|v| v.0);
        let rho_r = match (mu_at(lambda1 + d), mu_at(lambda1 + 0.25 * d)) {
            (Some(m1), Some(m2)) => (2.0 * m2 - m1).max(0.0),
            (Some(m1), None) => m1,
            _ => 0.0,
        };
        Ok(RiccatiSolver {
            smp,
            span,
            lambda1,
            rho_r,
            q_abs_max,
            opts: opts.clone(),
        })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn rho_r(&self) -> f64 {
        self.rho_r
    }

    pub fn mu(&self, gamma: f64) -> Result<f64> {
        if !(gamma > self.lambda1) {
            return Err(Error::BelowThreshold {
                gamma,
                threshold: self.lambda1,
            });
        }
        Ok(self.smp.mu(gamma)?.0)
    }

    /// Inverse of `gamma -> mu(gamma)` at `p`, i.e. the whole-line eigenvalue of `L_{-p}`.
    pub fn inverse_k(&self, p: f64) -> Result<KEstimate> {
        if !(p >= 0.0) {
            return Err(Error::InvalidParameter(format!("p = {p} must be nonnegative")));
        }
        let (smp, opts, span, lambda1, rho_r) = (&self.smp, &self.opts, self.span, self.lambda1, self.rho_r);
        let mu_at = |g: f64| -> Option<f64> { smp.mu(g).ok().map(|v| v.0) };
        let plateau = rho_r > opts.plateau_threshold && p <= rho_r;
        if plateau || p == 0.0 {
            let mut e = EigenEstimate::new(lambda1, Method::Riccati, Window::Interval(span.0, span.1), 0.0);
            e.plateau = plateau;
            return Ok(KEstimate {
                estimate: e,
                lambda1,
                rho_r,
            });
        }

        let mut lo = lambda1;
        let mut hi = {
            let mut g: f64 = lambda1 + 1.0;
            for k in 0..=2 * smp.steps {
                g = g.max(smp.a[k] * p * p + self.q_abs_max * p + smp.c[k] + 1.0);
            }
            g
        };
        let mut grow = 0;
        while mu_at(hi).is_none_or(|m| m < p) {
            hi = lambda1 + 2.0 * (hi - lambda1);
            grow += 1;
            if grow > 60 {
                return Err(Error::Bracket(format!("no gamma with mu(gamma) >= {p}")));
            }
        }
        // Illinois false position on mu(gamma) - p; plain bisection while the lower end blows up.
        let mut f_hi = mu_at(hi).unwrap() - p;
        let mut f_lo: Option<f64> = None;
        let mut side = 0i8;
        let mut iterations = 0;
        while hi - lo > opts.bisect_tol * (1.0 + hi.abs()) {
            let mid = match f_lo {
                Some(fl) if fl < 0.0 && f_hi > 0.0 => {
                    let g = hi - f_hi * (hi - lo) / (f_hi - fl);
                    if g > lo && g < hi { g } else { 0.5 * (lo + hi) }
                }
                _ => 0.5 * (lo + hi),
            };
            if mid <= lo || mid >= hi {
                break;
            }
            // A blow-up means no decaying solution: gamma is too low.
            match mu_at(mid) {
                Some(m) if m >= p => {
                    hi = mid;
                    f_hi = m - p;
                    if side == 1 {
                        f_lo = f_lo.map(|v| 0.5 * v);
                    }
                    side = 1;
                    if f_hi == 0.0 {
                        lo = hi;
                    }
                }
                Some(m) => {
                    lo = mid;
                    f_lo = Some(m - p);
                    if side == -1 {
                        f_hi *= 0.5;
                    }
                    side = -1;
                }
                None => {
                    lo = mid;
                    f_lo = None;
                    side = 0;
                }
            }
            iterations += 1;
            if iterations > 400 {
                return Err(Error::NoConvergence {
                    method: "gamma bracketing",
                    iterations,
                    defect: hi - lo,
                });
            }
        }
        let value = 0.5 * (lo + hi);
        Ok(KEstimate {
            estimate: EigenEstimate::new(value, Method::Riccati, Window::Interval(span.0, span.1), hi - lo),
            lambda1,
            rho_r,
        })
    }
}

/// Inverse of `gamma -> mu(gamma)` at `p` on one span; see [`RiccatiSolver`] for repeated use.
pub fn lyapunov_inverse_k(medium: &Medium, p: f64, span: (f64, f64), opts: &RiccatiOptions) -> Result<KEstimate> {
    RiccatiSolver::new(medium, span, opts)?.inverse_k(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{assemble_lp, periodic_principal_eigenvalue, PerronOptions};
    use crate::media::Mode;

    #[test]
    fn homogeneous_exponents() {
        let m = Medium::homogeneous(1.0, 0.0, 1.0).unwrap();
        let opts = RiccatiOptions::default();
        let t = riccati_mu(&m, 2.0, (0.0, 200.0), &opts).unwrap();
        assert!((t.mu - 1.0).abs() < 1e-8);
        assert!(t.r_samples.iter().all(|r| (r + 1.0).abs() < 1e-8));
        let t = riccati_mu(&m, 1.25, (0.0, 200.0), &opts).unwrap();
        assert!((t.mu - 0.5).abs() < 1e-8);
        assert!(matches!(riccati_mu(&m, 0.9, (0.0, 200.0), &opts), Err(Error::BelowThreshold { .. })));
    }

    #[test]
    fn homogeneous_inverse() {
        let m = Medium::homogeneous(1.0, 0.0, 1.0).unwrap();
        let opts = RiccatiOptions::default();
        let k = lyapunov_inverse_k(&m, 1.0, (0.0, 200.0), &opts).unwrap();
        assert!((k.estimate.value - 2.0).abs() < 1e-8);
        let k = lyapunov_inverse_k(&m, 0.01, (0.0, 200.0), &opts).unwrap();
        assert!(!k.estimate.plateau, "rho = {}", k.rho_r);
        assert!((k.estimate.value - 1.0001).abs() < 1e-8);
    }

    #[test]
    fn requires_divergence_form() {
        let m = Medium::homogeneous(1.0, 0.5, 1.0).unwrap();
        assert!(matches!(
            riccati_mu(&m, 2.0, (0.0, 10.0), &RiccatiOptions::default()),
            Err(Error::InvalidMedium(_))
        ));
    }

    #[test]
    fn periodic_divergence_matches_periodic_engine() {
        let m = Medium::periodic_divergence(&[Mode::new(0.2, 1.0, 0.0)], &[Mode::new(0.5, 1.0, 0.7)], 1.0, 1.0, 1.0).unwrap();
        let opts = RiccatiOptions::default();
        for p in [0.5, 1.0, 2.0] {
            let k = lyapunov_inverse_k(&m, p, (0.0, 200.0), &opts).unwrap();
            let per = periodic_principal_eigenvalue(&assemble_lp(&m, -p), 1000, &PerronOptions::default()).unwrap();
            assert!((k.estimate.value - per.value).abs() < 1e-4, "p = {p}: {} vs {}", k.estimate.value, per.value);
        }
    }
}
