//! Monotone piecewise-cubic Hermite interpolation.

use crate::error::{Error, Result};

/// Cubic Hermite interpolant whose slopes pass a Fritsch-Carlson limiter, so
/// monotone data stays monotone between knots.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl MonotoneCubic {
    /// `slopes` are used where they respect monotonicity; without them the
    /// three-point estimate is used.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, slopes: Option<Vec<f64>>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n || slopes.as_ref().is_some_and(|m| m.len() != n) {
            return Err(Error::InvalidArgument(
                "interpolant needs >= 2 matching knots".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "interpolant knots must be strictly increasing".into(),
            ));
        }
        let delta: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut ms = slopes.unwrap_or_else(|| {
            let mut m = vec![0.0; n];
            m[0] = delta[0];
            m[n - 1] = delta[n - 2];
            for i in 1..n - 1 {
                m[i] = if delta[i - 1] * delta[i] <= 0.0 {
                    0.0
                } else {
                    0.5 * (delta[i - 1] + delta[i])
                };
            }
            m
        });
        for i in 0..n - 1 {
            let d = delta[i];
            if d == 0.0 {
                ms[i] = 0.0;
                ms[i + 1] = 0.0;
                continue;
            }
            // slopes pointing against the secant are flattened
            if ms[i] / d < 0.0 {
                ms[i] = 0.0;
            }
            if ms[i + 1] / d < 0.0 {
                ms[i + 1] = 0.0;
            }
            let a = ms[i] / d;
            let b = ms[i + 1] / d;
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                ms[i] = t * a * d;
                ms[i + 1] = t * b * d;
            }
        }
        Ok(MonotoneCubic { xs, ys, ms })
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    /// Value at `x`; outside the knots the end cubic is extended.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.ms[i] + h01 * self.ys[i + 1] + h11 * h * self.ms[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        (d00 * self.ys[i] + d01 * self.ys[i + 1]) / h + d10 * self.ms[i] + d11 * self.ms[i + 1]
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;

    #[test]
    fn reproduces_knots_and_cubics() {
        let xs = linspace(0.0, 2.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        let ms: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        let c = MonotoneCubic::new(xs.clone(), ys.clone(), Some(ms)).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((c.eval(*x) - y).abs() < 1e-14);
        }
        assert!((c.eval(1.234) - 1.234f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn step_data_stays_monotone() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.0, 1.0, 1.0, 1.0];
        let c = MonotoneCubic::new(xs, ys, None).unwrap();
        let mut prev = c.eval(0.0);
        for x in linspace(0.0, 4.0, 401) {
            let v = c.eval(x);
            assert!(v >= prev - 1e-15 && (-1e-15..=1.0 + 1e-15).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0], None).is_err());
    }
}
