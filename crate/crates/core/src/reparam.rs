//! Change of variables `kappa = beta / w(alpha)`, `lambda = -z(alpha) / w(alpha)`
//! and the threshold curve `kappa*(lambda)` on which merit equals a target.
//!
//! In these coordinates utility (divided by `w(alpha) > 0`) becomes
//! `kappa*x + lambda*q - p`.

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::model::{LinearUtility, Merit, Point, TypeSpace, Weight};
use crate::numeric::{brent, expand_bracket, linspace, RootOptions};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReparamRectangle {
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
}

impl ReparamRectangle {
    pub fn lambda_span(&self) -> f64 {
        self.lambda_hi - self.lambda_lo
    }

    pub fn contains(&self, kappa: f64, lambda: f64) -> bool {
        kappa >= self.kappa_lo
            && kappa <= self.kappa_hi
            && lambda >= self.lambda_lo
            && lambda <= self.lambda_hi
    }
}

pub fn lambda_of_alpha(u: &LinearUtility, alpha: f64) -> f64 {
    -u.z.value(alpha) / u.w.value(alpha)
}

pub fn to_kl(u: &LinearUtility, t: Point) -> (f64, f64) {
    let w = u.w.value(t.alpha);
    (t.beta / w, -u.z.value(t.alpha) / w)
}

fn admissible(w: &Weight, alpha: f64) -> bool {
    let v = w.value(alpha);
    v.is_finite() && v > 0.0
}

/// Some `alpha` at which both weights are positive, to seed bracketing.
fn seed_alpha(u: &LinearUtility) -> Option<f64> {
    let natural = |w: &Weight| match *w {
        Weight::Power { c, .. } => c + 1.0,
        Weight::Affine { a, b } if b != 0.0 => (1.0 - a) / b,
        _ => 0.0,
    };
    [natural(&u.w), natural(&u.z), 0.0]
        .into_iter()
        .find(|&a| admissible(&u.w, a) && admissible(&u.z, a))
}

/// The inverse `f` of `alpha -> -z(alpha)/w(alpha)`.
pub fn alpha_of_lambda(u: &LinearUtility, lambda: f64) -> Result<f64> {
    if !(lambda < 0.0 && lambda.is_finite()) {
        return Err(Error::OutOfImage { lambda });
    }
    if let Some(a) = crate::model::family_closed_form_inverse(&u.w, &u.z, lambda) {
        return Ok(a);
    }
    let a0 = seed_alpha(u).ok_or(Error::OutOfImage { lambda })?;
    let g = |a: f64| lambda_of_alpha(u, a) - lambda;
    let ok = |a: f64| admissible(&u.w, a) && admissible(&u.z, a);
    let (lo, hi) = expand_bracket(g, ok, a0, a0 + 1.0, 200).ok_or(Error::OutOfImage { lambda })?;
    brent(g, lo, hi, RootOptions::default(), "alpha_of_lambda")
}

/// Merit in `(kappa, lambda)` coordinates.
pub fn merit_kl(u: &LinearUtility, merit: &Merit, kappa: f64, lambda: f64) -> Result<f64> {
    let a = alpha_of_lambda(u, lambda)?;
    Ok(merit.eval(a, kappa * u.w.value(a)))
}

/// `kappa*(lambda)`: the `kappa` at which merit equals `eta_star`, found by
/// bracketed root finding on `kappa -> merit_kl(kappa, lambda) - eta_star`.
pub fn kappa_star(u: &LinearUtility, merit: &Merit, eta_star: f64, lambda: f64) -> Result<f64> {
    let a = alpha_of_lambda(u, lambda)?;
    let w = u.w.value(a);
    let phi = |k: f64| merit.eval(a, k * w) - eta_star;
    let fail = Error::NoConvergence {
        what: "kappa_star",
        iterations: 200,
    };
    let (lo, hi) =
        expand_bracket(phi, |k: f64| k.is_finite(), 0.0, 1.0, 200).ok_or(fail.clone())?;
    let k = brent(phi, lo, hi, RootOptions::default(), "kappa_star")?;
    if phi(k).abs() > 1e-10 {
        return Err(fail);
    }
    Ok(k)
}

/// `beta` on the level set `eta(alpha, .) = level`, closed form when the family has one.
pub fn level_beta(merit: &Merit, alpha: f64, level: f64) -> Result<f64> {
    if let Some(b) = merit.beta_at_level(alpha, level) {
        return Ok(b);
    }
    let phi = |b: f64| merit.eval(alpha, b) - level;
    let (lo, hi) =
        expand_bracket(phi, |b: f64| b.is_finite(), 0.0, 1.0, 200).ok_or(Error::NoConvergence {
            what: "level_beta",
            iterations: 200,
        })?;
    brent(phi, lo, hi, RootOptions::default(), "level_beta")
}

/// `(kappa*, dkappa*/dlambda, d2kappa*/dlambda2)` at the `lambda` matching `alpha`.
///
/// With `B(alpha)` the level-set `beta`, `kappa* = B/w` and `lambda = g(alpha) = -z/w`,
/// the derivatives follow by the chain rule through `g`.
pub fn kappa_star_derivatives(
    u: &LinearUtility,
    merit: &Merit,
    eta_star: f64,
    alpha: f64,
) -> Result<(f64, f64, f64)> {
    let b = level_beta(merit, alpha, eta_star)?;
    let (ea, eb) = merit.grad(alpha, b);
    let (eaa, eab, ebb) = merit.hessian(alpha, b);
    let b1 = -ea / eb;
    let b2 = -((eaa + eab * b1) * eb - ea * (eab + ebb * b1)) / (eb * eb);

    let (w, w1, w2) = (u.w.value(alpha), u.w.d1(alpha), u.w.d2(alpha));
    let (z, z1, z2) = (u.z.value(alpha), u.z.d1(alpha), u.z.d2(alpha));

    let h = b / w;
    let h1 = (b1 * w - b * w1) / (w * w);
    let h2 = (b2 * w - b * w2) / (w * w) - 2.0 * w1 * (b1 * w - b * w1) / (w * w * w);

    let n = z * w1 - z1 * w;
    let n1 = z * w2 - z2 * w;
    let g1 = n / (w * w);
    let g2 = (n1 * w - 2.0 * n * w1) / (w * w * w);

    let k1 = h1 / g1;
    let k2 = (h2 * g1 - h1 * g2) / (g1 * g1 * g1);
    Ok((h, k1, k2))
}

/// Tabulated `kappa*(lambda)` with its first two derivatives.
#[derive(Debug, Clone)]
pub struct ThresholdCurve {
    pub eta_star: f64,
    pub lambdas: Vec<f64>,
    pub kappa: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    interp: MonotoneCubic,
}

impl ThresholdCurve {
    pub fn build(
        u: &LinearUtility,
        merit: &Merit,
        eta_star: f64,
        lambda_lo: f64,
        lambda_hi: f64,
        n: usize,
    ) -> Result<Self> {
        if n < 2 || !(lambda_lo < lambda_hi) {
            return Err(Error::InvalidArgument(format!(
                "threshold curve needs n >= 2 and lambda_lo < lambda_hi (n = {n})"
            )));
        }
        let lambdas = linspace(lambda_lo, lambda_hi, n);
        let (mut kappa, mut d1, mut d2) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for &l in &lambdas {
            let a = alpha_of_lambda(u, l)?;
            let (k, k1, k2) = kappa_star_derivatives(u, merit, eta_star, a)?;
            kappa.push(k);
            d1.push(k1);
            d2.push(k2);
        }
        let interp = MonotoneCubic::new(lambdas.clone(), kappa.clone(), Some(d1.clone()))?;
        Ok(ThresholdCurve {
            eta_star,
            lambdas,
            kappa,
            d1,
            d2,
            interp,
        })
    }

    /// Interpolated `kappa*(lambda)`.
    pub fn eval(&self, lambda: f64) -> f64 {
        self.interp.eval(lambda)
    }

    pub fn eval_d1(&self, lambda: f64) -> f64 {
        self.interp.derivative(lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureBounds {
    /// `1.25 * max |kappa*'|`
    pub m1: f64,
    /// `1.25 * max |kappa*''|`
    pub m2: f64,
    pub max_d1: f64,
    pub max_d2: f64,
    pub argmax_d1: f64,
    pub argmax_d2: f64,
}

pub const CURVATURE_SAFETY: f64 = 1.25;

/// Sampled maxima of `|kappa*'|` and `|kappa*''|` over `[lambda_lo, lambda_hi]`, inflated by 1.25.
pub fn curvature_bounds(
    u: &LinearUtility,
    merit: &Merit,
    eta_star: f64,
    lambda_lo: f64,
    lambda_hi: f64,
    n_samples: usize,
) -> Result<CurvatureBounds> {
    if n_samples < 101 {
        return Err(Error::InvalidArgument(format!(
            "curvature bounds need at least 101 samples, got {n_samples}"
        )));
    }
    let mut out = CurvatureBounds {
        m1: 0.0,
        m2: 0.0,
        max_d1: 0.0,
        max_d2: 0.0,
        argmax_d1: lambda_lo,
        argmax_d2: lambda_lo,
    };
    for l in linspace(lambda_lo, lambda_hi, n_samples) {
        let a = alpha_of_lambda(u, l)?;
        let (_, k1, k2) = kappa_star_derivatives(u, merit, eta_star, a)?;
        if !(k1.is_finite() && k2.is_finite()) {
            return Err(Error::NoConvergence {
                what: "curvature_bounds",
                iterations: 0,
            });
        }
        if k1.abs() > out.max_d1 {
            out.max_d1 = k1.abs();
            out.argmax_d1 = l;
        }
        if k2.abs() > out.max_d2 {
            out.max_d2 = k2.abs();
            out.argmax_d2 = l;
        }
    }
    out.m1 = CURVATURE_SAFETY * out.max_d1;
    out.m2 = CURVATURE_SAFETY * out.max_d2;
    Ok(out)
}

/// Hull of the `(kappa, lambda)` image of a dense boundary sample, padded by 1e-9.
pub fn bounding_rectangle(u: &LinearUtility, space: &TypeSpace) -> ReparamRectangle {
    let mut r = ReparamRectangle {
        kappa_lo: f64::INFINITY,
        kappa_hi: f64::NEG_INFINITY,
        lambda_lo: f64::INFINITY,
        lambda_hi: f64::NEG_INFINITY,
    };
    for p in space.boundary_sample(1000) {
        let (k, l) = to_kl(u, p);
        r.kappa_lo = r.kappa_lo.min(k);
        r.kappa_hi = r.kappa_hi.max(k);
        r.lambda_lo = r.lambda_lo.min(l);
        r.lambda_hi = r.lambda_hi.max(l);
    }
    const PAD: f64 = 1e-9;
    r.kappa_lo -= PAD;
    r.kappa_hi += PAD;
    r.lambda_lo -= PAD;
    r.lambda_hi += PAD;
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::bisection;

    fn s1() -> LinearUtility {
        LinearUtility::new(
            Weight::Exponential { a: 1.0, b: 1.0 },
            Weight::Exponential { a: 1.0, b: -1.0 },
        )
    }
    const SUM: Merit = Merit::WeightedSum { a: 1.0, b: 1.0 };

    #[test]
    fn to_kl_examples() {
        let u = s1();
        assert_eq!(to_kl(&u, Point::new(0.0, 1.0)), (1.0, -1.0));
        let (k, l) = to_kl(&u, Point::new(1.0, 2.0));
        assert!((k - 0.735759).abs() < 1e-6 && (l + 0.135335).abs() < 1e-6);
        assert!((k - 2.0 / 1f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn alpha_of_lambda_examples() {
        let u = s1();
        assert_eq!(alpha_of_lambda(&u, -1.0).unwrap(), 0.0);
        let l = -(-2f64).exp();
        let a = alpha_of_lambda(&u, l).unwrap();
        let b = bisection(|a| lambda_of_alpha(&u, a) - l, 0.0, 3.0, 200);
        assert!((a - 1.0).abs() < 1e-12 && (a - b).abs() < 1e-12);
        assert_eq!(
            alpha_of_lambda(&u, 0.5),
            Err(Error::OutOfImage { lambda: 0.5 })
        );
    }

    #[test]
    fn generic_inverse_by_root_finding() {
        // exp money weight with an affine ordeal weight has no closed-form inverse
        let u = LinearUtility::new(
            Weight::Exponential { a: 1.0, b: 1.0 },
            Weight::Affine { a: 2.0, b: -1.0 },
        );
        for &a in &[0.1, 0.5, 0.9] {
            let l = lambda_of_alpha(&u, a);
            assert!((alpha_of_lambda(&u, l).unwrap() - a).abs() < 1e-12);
        }
    }

    #[test]
    fn merit_kl_examples() {
        let u = s1();
        assert!((merit_kl(&u, &SUM, 0.7, -1.0).unwrap() - 0.7).abs() < 1e-15);
        let e = 1f64.exp();
        assert!((merit_kl(&u, &SUM, 1.0 / e, -1.0 / (e * e)).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_star_examples() {
        let u = s1();
        assert!((kappa_star(&u, &SUM, 2.0, -1.0).unwrap() - 2.0).abs() < 1e-12);
        let l = -(-2f64).exp();
        let k = kappa_star(&u, &SUM, 2.0, l).unwrap();
        let closed = (2.0 + 0.5 * (-l).ln()) * (-l).sqrt();
        assert!((k - closed).abs() < 1e-12);
        assert!((k - 0.367879).abs() < 1e-6);
        let (h, _, _) = kappa_star_derivatives(&u, &SUM, 2.0, 1.0).unwrap();
        assert!((h - k).abs() < 1e-14);
    }

    #[test]
    fn s1_curvature_matches_oracle() {
        let u = s1();
        let e = 1f64.exp();
        let cb = curvature_bounds(&u, &SUM, 2.0, -1.0, -1.0 / (e * e), 101).unwrap();
        assert!((cb.max_d1 - e).abs() < 1e-12);
        assert!((cb.m1 - 3.39785).abs() < 1e-5);
        assert!((cb.max_d2 - 5.021384).abs() < 1e-6);
        assert!((cb.m2 - 6.27673).abs() < 1e-5);
        assert!((cb.argmax_d1 - -1.0 / (e * e)).abs() < 1e-15);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let u = s1();
        let kstar = |l: f64| kappa_star(&u, &SUM, 2.0, l).unwrap();
        for &l in &[-0.9, -0.5, -0.2] {
            let a = alpha_of_lambda(&u, l).unwrap();
            let (_, k1, k2) = kappa_star_derivatives(&u, &SUM, 2.0, a).unwrap();
            let h = 1e-4;
            let fd1 = (kstar(l + h) - kstar(l - h)) / (2.0 * h);
            let fd2 = (kstar(l + h) - 2.0 * kstar(l) + kstar(l - h)) / (h * h);
            assert!((k1 - fd1).abs() < 1e-6, "{k1} {fd1}");
            assert!((k2 - fd2).abs() < 1e-4, "{k2} {fd2}");
        }
    }

    #[test]
    fn linear_curve_has_zero_curvature() {
        // constant money weight and affine ordeal weight make kappa* affine in lambda
        let u = LinearUtility::new(
            Weight::Exponential { a: 1.0, b: 0.0 },
            Weight::Affine { a: 2.0, b: -1.0 },
        );
        let cb = curvature_bounds(&u, &SUM, 2.0, -2.0, -1.0, 101).unwrap();
        assert!(cb.max_d2.abs() < 1e-12);
        assert!((cb.max_d1 - 1.0).abs() < 1e-12);
        assert_eq!(cb.m2, 0.0);
    }

    #[test]
    fn curvature_needs_enough_samples() {
        assert!(curvature_bounds(&s1(), &SUM, 2.0, -1.0, -0.2, 50).is_err());
    }

    #[test]
    fn rectangle_of_s1() {
        let u = s1();
        let space = TypeSpace::new(0.0, 1.0, 1.0, 2.0).unwrap();
        let r = bounding_rectangle(&u, &space);
        let e = 1f64.exp();
        assert!((r.kappa_lo - 1.0 / e).abs() < 2e-9 && (r.kappa_hi - 2.0).abs() < 2e-9);
        assert!((r.lambda_lo + 1.0).abs() < 2e-9 && (r.lambda_hi + 1.0 / (e * e)).abs() < 2e-9);
    }

    #[test]
    fn interpolated_curve_stays_on_level() {
        let u = s1();
        let e = 1f64.exp();
        let c = ThresholdCurve::build(&u, &SUM, 2.0, -1.0, -1.0 / (e * e), 401).unwrap();
        for i in 0..400 {
            let l = c.lambdas[i] + 0.37 * (c.lambdas[i + 1] - c.lambdas[i]);
            let eta = merit_kl(&u, &SUM, c.eval(l), l).unwrap();
            assert!((eta - 2.0).abs() < 1e-8, "{l}: {eta}");
        }
    }
}
