//! Spreading speeds of one-dimensional heterogeneous KPP fronts.
//!
//! Speeds are computed twice: by long-time simulation of
//! `u_t = a u_xx + q u_x + f(x, u)` and from principal eigenvalues of the
//! conjugated operators `L_p phi = e^{-px} L(e^{px} phi)` through
//! `w = min_{p>0} H(-p)/p`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod eigen;
pub mod error;
pub mod linalg;
pub mod media;
pub mod pde;
pub mod speed;

pub use error::{Error, Result};
pub use media::{ClassTag, CoefficientField, Medium, MediumSpec, Mode, Nonlinearity};

/// Decimal rendering with 17 significant digits, used by every CSV writer.
pub fn num17(x: f64) -> String {
    format!("{x:.16e}")
}
