//! Scalar root finding and small numeric helpers.

use crate::error::{Error, Result};

/// Stopping rule for the bracketed solvers.
#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Absolute tolerance on the root location.
    pub x_tol: f64,
    /// Stop as soon as `|f(x)| <= f_tol`.
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            x_tol: 1e-15,
            f_tol: 0.0,
            max_iter: 200,
        }
    }
}

/// Brent's method on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite sign
/// (or one of them zero).
pub fn brent<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: RootOptions,
    what: &'static str,
) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::NoConvergence {
            what,
            iterations: 0,
        });
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut mflag = true;
    for _ in 0..opts.max_iter {
        if fb.abs() <= opts.f_tol {
            return Ok(b);
        }
        let tol = opts.x_tol.max(4.0 * f64::EPSILON * b.abs());
        if (b - a).abs() <= tol {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let between = if lo < b {
            s > lo && s < b
        } else {
            s > b && s < lo
        };
        let bisect = !between
            || (mflag && (s - b).abs() >= (b - c).abs() / 2.0)
            || (!mflag && (s - b).abs() >= (c - d).abs() / 2.0)
            || (mflag && (b - c).abs() < tol)
            || (!mflag && (c - d).abs() < tol)
            || !s.is_finite();
        if bisect {
            s = 0.5 * (a + b);
            mflag = true;
        } else {
            mflag = false;
        }
        let fs = f(s);
        if !fs.is_finite() {
            return Err(Error::NoConvergence {
                what,
                iterations: 0,
            });
        }
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Err(Error::NoConvergence {
        what,
        iterations: opts.max_iter,
    })
}

/// Plain bisection, used as an independent cross-check of [`brent`].
pub fn bisection<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iterations: usize) -> f64 {
    let mut fa = f(a);
    for _ in 0..iterations {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Grows `[a, b]` geometrically around its midpoint until `f` changes sign.
///
/// Points where `admissible` is false are never evaluated; expansion on that
/// side stops at the last admissible point.
pub fn expand_bracket<F, A>(
    f: F,
    admissible: A,
    a: f64,
    b: f64,
    max_expansions: usize,
) -> Option<(f64, f64)>
where
    F: Fn(f64) -> f64,
    A: Fn(f64) -> bool,
{
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    if !(admissible(lo) && admissible(hi)) {
        return None;
    }
    let mut width = (hi - lo).max(1e-3);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    // step outward from `from` by up to `step`, halving while inadmissible
    let probe = |from: f64, mut step: f64, dir: f64| -> Option<f64> {
        for _ in 0..60 {
            let cand = from + dir * step;
            if admissible(cand) {
                return Some(cand);
            }
            step *= 0.5;
        }
        None
    };
    for _ in 0..max_expansions {
        if flo == 0.0 || fhi == 0.0 || flo.signum() != fhi.signum() {
            return Some((lo, hi));
        }
        width *= 2.0;
        let grow_low = flo.abs() < fhi.abs();
        let moved = if grow_low {
            probe(lo, width, -1.0).map(|c| {
                lo = c;
                flo = f(lo);
            })
        } else {
            probe(hi, width, 1.0).map(|c| {
                hi = c;
                fhi = f(hi);
            })
        };
        moved?;
    }
    if flo.signum() != fhi.signum() {
        Some((lo, hi))
    } else {
        None
    }
}

/// `n` evenly spaced points covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Five-point Gauss-Legendre quadrature on `[a, b]`.
pub fn gauss_legendre5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    NODES
        .iter()
        .zip(WEIGHTS.iter())
        .map(|(t, w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}
