//! Banded solvers shared by the time stepper and the eigenvalue engines.
//!
//! Row `i` of a tridiagonal system reads
//! `lower[i] * x[i-1] + diag[i] * x[i] + upper[i] * x[i+1] = rhs[i]`.
//! For plain systems `lower[0]` and `upper[n-1]` are ignored; for cyclic
//! systems they hold the wrap-around corners `A[0][n-1]` and `A[n-1][0]`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// y = A x, treating the matrix as non-cyclic.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    /// y = A x including the wrap-around corners.
    pub fn apply_cyclic(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let left = if i == 0 { x[n - 1] } else { x[i - 1] };
            let right = if i + 1 == n { x[0] } else { x[i + 1] };
            y[i] = self.lower[i] * left + self.diag[i] * x[i] + self.upper[i] * right;
        }
    }

    /// Thomas algorithm; `rhs` is overwritten with the solution.
    pub fn solve(&self, rhs: &mut [f64]) -> Result<()> {
        thomas(&self.lower, &self.diag, &self.upper, rhs)
    }

    /// Sherman-Morrison reduction of the cyclic system to two plain solves.
    pub fn solve_cyclic(&self, rhs: &mut [f64]) -> Result<()> {
        let n = self.len();
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "cyclic tridiagonal solve needs n >= 3, got {n}"
            )));
        }
        let beta = self.lower[0];
        let alpha = self.upper[n - 1];
        let gamma = -self.diag[0];
        if gamma == 0.0 {
            return Err(Error::SingularSystem(0));
        }
        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= alpha * beta / gamma;

        thomas(&self.lower, &diag, &self.upper, rhs)?;
        let mut z = vec![0.0; n];
        z[0] = gamma;
        z[n - 1] = alpha;
        thomas(&self.lower, &diag, &self.upper, &mut z)?;

        let denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
        if denom == 0.0 {
            return Err(Error::SingularSystem(n - 1));
        }
        let fact = (rhs[0] + beta * rhs[n - 1] / gamma) / denom;
        for (x, zi) in rhs.iter_mut().zip(&z) {
            *x -= fact * zi;
        }
        Ok(())
    }
}

/// LU factors of a plain tridiagonal matrix, reused across right-hand sides.
#[derive(Clone, Debug, Default)]
pub struct TridiagonalFactor {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    c_prime: Vec<f64>,
}

impl TridiagonalFactor {
    pub fn new(m: &Tridiagonal) -> Result<Self> {
        let n = m.len();
        let mut inv_pivot = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        for i in 0..n {
            let pivot = if i == 0 {
                m.diag[0]
            } else {
                m.diag[i] - m.lower[i] * c_prime[i - 1]
            };
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularSystem(i));
            }
            inv_pivot[i] = 1.0 / pivot;
            c_prime[i] = if i + 1 < n { m.upper[i] / pivot } else { 0.0 };
        }
        Ok(TridiagonalFactor {
            lower: m.lower.clone(),
            inv_pivot,
            c_prime,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    pub fn solve(&self, rhs: &mut [f64]) {
        let n = self.len();
        if n == 0 {
            return;
        }
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c_prime[i] * rhs[i + 1];
        }
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    if n == 0 {
        return Ok(());
    }
    let mut c_prime = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::SingularSystem(0));
    }
    c_prime[0] = upper[0] / pivot;
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c_prime[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem(i));
        }
        c_prime[i] = if i + 1 < n { upper[i] / pivot } else { 0.0 };
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c_prime[i] * rhs[i + 1];
    }
    Ok(())
}

/// Least-squares fit of `y ~ sum_j coef_j * basis_j(x)` via normal equations.
/// Only used for the handful of tiny fits (two or three unknowns) in the
/// front and extrapolation code.
pub(crate) fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let m = rows.first()?.len();
    let mut ata = vec![vec![0.0; m]; m];
    let mut aty = vec![0.0; m];
    for (row, &yi) in rows.iter().zip(y) {
        for j in 0..m {
            aty[j] += row[j] * yi;
            for k in 0..m {
                ata[j][k] += row[j] * row[k];
            }
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..m {
        let piv = (col..m).max_by(|&a, &b| ata[a][col].abs().total_cmp(&ata[b][col].abs()))?;
        if ata[piv][col].abs() < 1e-300 {
            return None;
        }
        ata.swap(col, piv);
        aty.swap(col, piv);
        for r in col + 1..m {
            let f = ata[r][col] / ata[col][col];
            for k in col..m {
                ata[r][k] -= f * ata[col][k];
            }
            aty[r] -= f * aty[col];
        }
    }
    let mut coef = vec![0.0; m];
    for r in (0..m).rev() {
        let mut s = aty[r];
        for k in r + 1..m {
            s -= ata[r][k] * coef[k];
        }
        coef[r] = s / ata[r][r];
    }
    Some(coef)
}
