//! Piecewise cubic Hermite interpolation with Fritsch-Carlson slope limiting.

#[derive(Clone, Debug)]
pub(crate) struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

fn three_point(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    (h1 * s0 + h0 * s1) / (h0 + h1)
}

impl MonotoneCubic {
    /// `x` strictly increasing, at least two points.
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = s[0];
            d[1] = s[0];
        } else {
            for i in 1..n - 1 {
                d[i] = if s[i - 1] * s[i] <= 0.0 {
                    0.0
                } else {
                    three_point(h[i - 1], h[i], s[i - 1], s[i])
                };
            }
            // One-sided quadratic slopes at the ends.
            d[0] = ((2.0 * h[0] + h[1]) * s[0] - h[0] * s[1]) / (h[0] + h[1]);
            if d[0] * s[0] <= 0.0 {
                d[0] = 0.0;
            }
            let m = n - 1;
            d[m] = ((2.0 * h[m - 1] + h[m - 2]) * s[m - 1] - h[m - 1] * s[m - 2]) / (h[m - 1] + h[m - 2]);
            if d[m] * s[m - 1] <= 0.0 {
                d[m] = 0.0;
            }
        }
        for i in 0..n - 1 {
            if s[i] == 0.0 {
                d[i] = 0.0;
                d[i + 1] = 0.0;
                continue;
            }
            let a = d[i] / s[i];
            let b = d[i + 1] / s[i];
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                d[i] = t * a * s[i];
                d[i + 1] = t * b * s[i];
            }
        }
        MonotoneCubic {
            x: x.to_vec(),
            y: y.to_vec(),
            d,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_quadratics_with_vertex_on_grid() {
        let x: Vec<f64> = (-16..=16).map(|k| k as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|p| p * p + 1.0).collect();
        let m = MonotoneCubic::new(&x, &y);
        for t in [-3.9, -1.3, -0.1, 0.05, 0.6, 2.77] {
            assert!((m.eval(t) - (t * t + 1.0)).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn preserves_monotone_data() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 0.0, 1.0, 1.0, 5.0];
        let m = MonotoneCubic::new(&x, &y);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=400 {
            let v = m.eval(k as f64 * 0.01);
            assert!(v >= prev - 1e-14);
            prev = v;
        }
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, v) = golden_min(|t| (t - 0.3).powi(2) + 2.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6 && (v - 2.0).abs() < 1e-12);
    }
}
