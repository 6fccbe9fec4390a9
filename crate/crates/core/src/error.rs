use thiserror::Error;

/// Errors raised by media construction, the solvers and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unstable step at t = {t}: value {value:.6e} at node {node} leaves [0, 1]")]
    Unstable { t: f64, node: usize, value: f64 },

    #[error("singular tridiagonal system (zero pivot at row {0})")]
    SingularSystem(usize),

    #[error("{method} did not converge after {iterations} iterations (last defect {defect:.3e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        defect: f64,
    },

    #[error("eigenvector entry {value:.3e} at node {node} is not positive")]
    NotPositive { node: usize, value: f64 },

    #[error("discretization loses positivity: off-diagonal {value:.3e} at node {node}, refine the grid")]
    GridTooCoarse { node: usize, value: f64 },

    #[error("domain growth would exceed the cap of {cap} nodes")]
    MemoryCap { cap: usize },

    #[error("gamma = {gamma} does not exceed the principal eigenvalue estimate {threshold}")]
    BelowThreshold { gamma: f64, threshold: f64 },

    #[error("Riccati solution left the decaying branch at x = {x} (r = {r:.3e})")]
    RiccatiBlowUp { x: f64, r: f64 },

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("optimum at the edge of the table (p = {p}); widen the grid")]
    EdgeOptimum { p: f64 },

    #[error("window monotonicity violated at R = {r}: {detail}")]
    Monotonicity { r: f64, detail: String },

    #[error("mismatched discretizations: {0}")]
    Mismatch(String),

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("trajectory too short: {0}")]
    TooShort(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status used by the CLI for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::InvalidParameter(_) | Error::InvalidMedium(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
