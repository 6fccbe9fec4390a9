//! Principal eigenvalues of the conjugated operators
//! `L_p phi = a phi'' + (2 p a + q) phi' + (a p^2 + q p + c) phi`.

mod corrector;
mod perron;
mod riccati;
mod window;

use serde::{Deserialize, Serialize};

use crate::media::Medium;

pub use corrector::{approximate_corrector, richardson_lambda, CorrectorOptions, CorrectorSolution};
pub use perron::{dirichlet_lp_eigenvalue, dirichlet_principal_eigenvalue, periodic_principal_eigenvalue, PerronOptions};
pub use riccati::{lyapunov_inverse_k, riccati_mu, KEstimate, RiccatiOptions, RiccatiSolver, RiccatiTrace};
pub use window::{window_h, Engine, WindowDiagnostic, WindowH, WindowOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Periodic,
    DirichletWindow,
    Corrector,
    Riccati,
    ConstTestfnLower,
    ConstTestfnUpper,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Periodic => "periodic",
            Method::DirichletWindow => "dirichlet_window",
            Method::Corrector => "corrector",
            Method::Riccati => "riccati",
            Method::ConstTestfnLower => "const_testfn_lower",
            Method::ConstTestfnUpper => "const_testfn_upper",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Interval(f64, f64),
    WholeLine,
}

/// One principal-eigenvalue evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct EigenEstimate {
    pub value: f64,
    pub method: Method,
    pub window: Window,
    pub residual: f64,
    #[serde(skip)]
    pub eigenfunction: Option<Vec<f64>>,
    /// Set by the Lyapunov engine when `p` lies on the plateau below `rho_R`.
    pub plateau: bool,
}

impl EigenEstimate {
    pub fn new(value: f64, method: Method, window: Window, residual: f64) -> Self {
        EigenEstimate {
            value,
            method,
            window,
            residual,
            eigenfunction: None,
            plateau: false,
        }
    }
}

/// `L_p` for a fixed medium and momentum.
#[derive(Clone, Debug)]
pub struct OperatorLp {
    pub medium: Medium,
    pub p: f64,
}

pub fn assemble_lp(medium: &Medium, p: f64) -> OperatorLp {
    OperatorLp {
        medium: medium.clone(),
        p,
    }
}

impl OperatorLp {
    #[inline]
    pub fn second_order(&self, x: f64) -> f64 {
        self.medium.a.value(x)
    }

    #[inline]
    pub fn first_order(&self, x: f64) -> f64 {
        2.0 * self.p * self.medium.a.value(x) + self.medium.q.value(x)
    }

    #[inline]
    pub fn zeroth_order(&self, x: f64) -> f64 {
        let m = &self.medium;
        m.a.value(x) * self.p * self.p + m.q.value(x) * self.p + m.c().value(x)
    }

    /// All three coefficients at once.
    #[inline]
    pub fn coefficients(&self, x: f64) -> (f64, f64, f64) {
        let m = &self.medium;
        let (a, q, c) = (m.a.value(x), m.q.value(x), m.c().value(x));
        let p = self.p;
        (a, 2.0 * p * a + q, a * p * p + q * p + c)
    }
}

/// Inf and sup of the zeroth-order coefficient over `samples` points of the window:
/// the constant test function `phi = 1` certifies both bounds.
pub fn const_testfn_bounds(op: &OperatorLp, window: (f64, f64), samples: usize) -> (EigenEstimate, EigenEstimate) {
    let (lo, hi) = window;
    let n = samples.max(2);
    let mut mn = f64::INFINITY;
    let mut mx = f64::NEG_INFINITY;
    for i in 0..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let z = op.zeroth_order(x);
        mn = mn.min(z);
        mx = mx.max(z);
    }
    let w = Window::Interval(lo, hi);
    (
        EigenEstimate::new(mn, Method::ConstTestfnLower, w, 0.0),
        EigenEstimate::new(mx, Method::ConstTestfnUpper, w, 0.0),
    )
}

/// Default sample count for constant-test-function bounds: spacing 0.01, capped.
pub fn testfn_samples(window: (f64, f64)) -> usize {
    (((window.1 - window.0) / 0.01) as usize + 1).clamp(2, 200_001)
}
