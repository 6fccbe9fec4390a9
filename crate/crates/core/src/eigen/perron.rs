//! Perron roots of finite-difference discretizations by shifted inverse iteration.

use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;
use crate::media::Medium;

use super::{assemble_lp, EigenEstimate, Method, OperatorLp, Window};

#[derive(Clone, Debug)]
pub struct PerronOptions {
    /// Stop once the Collatz-Wielandt bounds agree to this (relative) width.
    pub tol: f64,
    pub max_iter: usize,
    /// Entries below this fraction of the maximum are left out of the ratio bounds.
    pub significant: f64,
}

impl Default for PerronOptions {
    fn default() -> Self {
        PerronOptions {
            tol: 1e-12,
            max_iter: 500,
            significant: 1e-8,
        }
    }
}

fn discretize(op: &OperatorLp, xs: &[f64], h: f64) -> Result<Tridiagonal> {
    let n = xs.len();
    let mut m = Tridiagonal::zeros(n);
    let inv2 = 1.0 / (h * h);
    for (i, &x) in xs.iter().enumerate() {
        let (a, b, z) = op.coefficients(x);
        let lo = a * inv2 - b / (2.0 * h);
        let up = a * inv2 + b / (2.0 * h);
        if lo < 0.0 || up < 0.0 {
            return Err(Error::GridTooCoarse {
                node: i,
                value: lo.min(up),
            });
        }
        m.lower[i] = lo;
        m.upper[i] = up;
        m.diag[i] = -2.0 * a * inv2 + z;
    }
    Ok(m)
}

/// Largest real eigenvalue of `m` (nonnegative off-diagonals), with its positive eigenvector.
pub(crate) fn perron_root(m: &Tridiagonal, cyclic: bool, opts: &PerronOptions) -> Result<(f64, Vec<f64>, f64)> {
    let n = m.len();
    let apply = |x: &[f64], y: &mut [f64]| {
        if cyclic {
            m.apply_cyclic(x, y)
        } else {
            m.apply(x, y)
        }
    };
    // Row sums bound the Perron root from above.
    let row_max = (0..n)
        .map(|i| {
            let mut s = m.diag[i];
            if cyclic || i > 0 {
                s += m.lower[i];
            }
            if cyclic || i + 1 < n {
                s += m.upper[i];
            }
            s
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sigma = row_max + 1.0;
    let mut x = vec![1.0; n];
    let mut mx = vec![0.0; n];
    let mut b = Tridiagonal::zeros(n);
    let mut last_width = f64::INFINITY;

    for _ in 0..opts.max_iter {
        for i in 0..n {
            b.lower[i] = -m.lower[i];
            b.upper[i] = -m.upper[i];
            b.diag[i] = sigma - m.diag[i];
        }
        let mut y = x.clone();
        if cyclic {
            b.solve_cyclic(&mut y)?;
        } else {
            b.solve(&mut y)?;
        }
        // A shift that lands below the root flips the sign of the iterate.
        if y.iter().sum::<f64>() < 0.0 {
            y.iter_mut().for_each(|v| *v = -*v);
        }
        let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(ymax > 0.0) || !ymax.is_finite() {
            return Err(Error::NoConvergence {
                method: "inverse iteration",
                iterations: 0,
                defect: f64::NAN,
            });
        }
        y.iter_mut().for_each(|v| *v /= ymax);
        x = y;

        apply(&x, &mut mx);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            if x[i] >= opts.significant {
                let r = mx[i] / x[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        let width = hi - lo;
        let scale = 1.0 + hi.abs().max(lo.abs());
        if width <= opts.tol * scale || (width <= 1e3 * opts.tol * scale && width >= last_width) {
            if let Some((i, &v)) = x.iter().enumerate().find(|(_, v)| **v < -1e-12) {
                return Err(Error::NotPositive { node: i, value: v });
            }
            x.iter_mut().for_each(|v| *v = v.max(0.0));
            let value = 0.5 * (lo + hi);
            return Ok((value, x, 0.5 * width));
        }
        last_width = width;
        sigma = hi + width.max(1e-10 * scale);
    }
    Err(Error::NoConvergence {
        method: "inverse iteration",
        iterations: opts.max_iter,
        defect: last_width,
    })
}

/// Periodic principal eigenvalue of `L_p` on one period with `n` nodes.
pub fn periodic_principal_eigenvalue(op: &OperatorLp, n: usize, opts: &PerronOptions) -> Result<EigenEstimate> {
    let period = op
        .medium
        .period()
        .ok_or_else(|| Error::InvalidMedium(format!("medium {} has no common period", op.medium.id)))?;
    if n < 16 {
        return Err(Error::InvalidParameter(format!("need n >= 16 nodes per period, got {n}")));
    }
    let h = period / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let m = discretize(op, &xs, h)?;
    let (value, phi, residual) = perron_root(&m, true, opts)?;
    let mut est = EigenEstimate::new(value, Method::Periodic, Window::WholeLine, residual);
    est.eigenfunction = Some(phi);
    Ok(est)
}

/// Dirichlet principal eigenvalue of `L_p` on `interval` with `n` interior nodes.
pub fn dirichlet_lp_eigenvalue(op: &OperatorLp, interval: (f64, f64), n: usize, opts: &PerronOptions) -> Result<EigenEstimate> {
    let (lo, hi) = interval;
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty interval ({lo}, {hi})")));
    }
    if n < 16 {
        return Err(Error::InvalidParameter(format!("need n >= 16 interior nodes, got {n}")));
    }
    let h = (hi - lo) / (n + 1) as f64;
    let xs: Vec<f64> = (1..=n).map(|i| lo + i as f64 * h).collect();
    let m = discretize(op, &xs, h)?;
    let (value, phi, residual) = perron_root(&m, false, opts)?;
    let mut est = EigenEstimate::new(value, Method::DirichletWindow, Window::Interval(lo, hi), residual);
    est.eigenfunction = Some(phi);
    Ok(est)
}

/// Dirichlet principal eigenvalue of the unconjugated operator on `interval`.
pub fn dirichlet_principal_eigenvalue(medium: &Medium, interval: (f64, f64), n: usize) -> Result<EigenEstimate> {
    dirichlet_lp_eigenvalue(&assemble_lp(medium, 0.0), interval, n, &PerronOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Mode;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn cosine_medium() -> Medium {
        Medium::periodic(&[], &[], &[Mode::new(0.5, 1.0, 0.0)], 1.0, [1.0, 0.0, 1.0]).unwrap()
    }

    fn dense(op: &OperatorLp, n: usize, period: f64) -> DMatrix<f64> {
        let h = period / n as f64;
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            let (a, b, z) = op.coefficients(i as f64 * h);
            d[(i, (i + n - 1) % n)] += a / (h * h) - b / (2.0 * h);
            d[(i, i)] += -2.0 * a / (h * h) + z;
            d[(i, (i + 1) % n)] += a / (h * h) + b / (2.0 * h);
        }
        d
    }

    #[test]
    fn homogeneous_periodic_value_is_exact() {
        let m = Medium::homogeneous(1.0, 0.0, 1.0).unwrap();
        for p in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            let e = periodic_principal_eigenvalue(&assemble_lp(&m, p), 64, &PerronOptions::default()).unwrap();
            assert!((e.value - (p * p + 1.0)).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn matches_dense_symmetric_oracle() {
        let op = assemble_lp(&cosine_medium(), 0.0);
        let d = dense(&op, 256, 1.0);
        let eig = nalgebra::SymmetricEigen::new(d.clone());
        let oracle = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e = periodic_principal_eigenvalue(&op, 256, &PerronOptions::default()).unwrap();
        assert!((e.value - oracle).abs() < 1e-8, "{} vs {}", e.value, oracle);
        let phi = e.eigenfunction.unwrap();
        assert!(phi.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn matches_dense_nonsymmetric_oracle() {
        let m = Medium::periodic(&[Mode::new(0.2, 1.0, 0.3)], &[Mode::new(0.3, 2.0, 0.0)], &[Mode::new(0.5, 1.0, 0.0)], 1.0, [1.0, 0.1, 1.0]).unwrap();
        for p in [-1.0, 0.7] {
            let op = assemble_lp(&m, p);
            let d = dense(&op, 128, 1.0);
            let oracle = d
                .complex_eigenvalues()
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max);
            let e = periodic_principal_eigenvalue(&op, 128, &PerronOptions::default()).unwrap();
            assert!((e.value - oracle).abs() < 1e-8, "p = {p}: {} vs {}", e.value, oracle);
        }
    }

    #[test]
    fn growth_shift_moves_value_exactly() {
        let m = cosine_medium();
        let base = periodic_principal_eigenvalue(&assemble_lp(&m, 0.4), 128, &PerronOptions::default()).unwrap();
        let shifted = periodic_principal_eigenvalue(&assemble_lp(&m.with_growth_shift(3.0), 0.4), 128, &PerronOptions::default()).unwrap();
        assert!((shifted.value - base.value - 3.0).abs() < 1e-10);
    }

    #[test]
    fn dirichlet_laplacian_on_pi() {
        let m = Medium::homogeneous(1.0, 0.0, 1.0).unwrap().with_growth_shift(-1.0);
        let e = dirichlet_principal_eigenvalue(&m, (0.0, PI), 2000).unwrap();
        assert!((e.value + 1.0).abs() < 1e-6, "{}", e.value);
    }

    #[test]
    fn dirichlet_monotone_in_interval() {
        let m = cosine_medium();
        let h = 0.01;
        let mut prev = f64::NEG_INFINITY;
        for r in [1.0, 2.0, 4.0, 8.0] {
            let n = (2.0 * r / h) as usize - 1;
            let e = dirichlet_principal_eigenvalue(&m, (-r, r), n).unwrap();
            assert!(e.value >= prev - 1e-8);
            prev = e.value;
        }
        // Increasing toward the periodic value from below.
        let per = periodic_principal_eigenvalue(&assemble_lp(&m, 0.0), 100, &PerronOptions::default()).unwrap();
        assert!(prev <= per.value + 1e-8 && per.value - prev < 0.05);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let m = Medium::homogeneous(1.0, 0.0, 1.0).unwrap();
        let r = periodic_principal_eigenvalue(&assemble_lp(&m, 50.0), 16, &PerronOptions::default());
        assert!(matches!(r, Err(Error::GridTooCoarse { .. })));
    }
}
