use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt;

/// Positive scalar weight of `alpha` with closed-form derivatives.
///
/// Used both for the money burden `w` and the ordeal burden `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family")]
pub enum Weight {
    /// `a * exp(b * alpha)`
    Exponential { a: f64, b: f64 },
    /// `a * (alpha - c)^k`, defined for `alpha > c`
    Power { a: f64, c: f64, k: f64 },
    /// `a + b * alpha`
    Affine { a: f64, b: f64 },
}

impl Weight {
    pub fn value(&self, alpha: f64) -> f64 {
        match *self {
            Weight::Exponential { a, b } => a * (b * alpha).exp(),
            Weight::Power { a, c, k } => a * (alpha - c).powf(k),
            Weight::Affine { a, b } => a + b * alpha,
        }
    }

    pub fn d1(&self, alpha: f64) -> f64 {
        match *self {
            Weight::Exponential { a, b } => a * b * (b * alpha).exp(),
            Weight::Power { a, c, k } => a * k * (alpha - c).powf(k - 1.0),
            Weight::Affine { b, .. } => b,
        }
    }

    pub fn d2(&self, alpha: f64) -> f64 {
        match *self {
            Weight::Exponential { a, b } => a * b * b * (b * alpha).exp(),
            Weight::Power { a, c, k } => a * k * (k - 1.0) * (alpha - c).powf(k - 2.0),
            Weight::Affine { .. } => 0.0,
        }
    }

    /// Rejects parameters outside the family's admissible set, given the
    /// closed alpha interval the weight must be positive on.
    pub fn check(&self, alpha_lo: f64, alpha_hi: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedScenario(msg));
        match *self {
            Weight::Exponential { a, b } => {
                if !(a > 0.0 && a.is_finite() && b.is_finite()) {
                    return bad(format!("exp({a},{b}): need a > 0"));
                }
            }
            Weight::Power { a, c, k } => {
                if !(a > 0.0 && a.is_finite() && c.is_finite() && k.is_finite() && k != 0.0) {
                    return bad(format!("power({a},{c},{k}): need a > 0, k != 0"));
                }
                if !(alpha_lo > c) {
                    return bad(format!(
                        "power({a},{c},{k}): need alpha > {c} on the domain"
                    ));
                }
            }
            Weight::Affine { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    return bad(format!("affine({a},{b}): non-finite parameter"));
                }
                if a + b * alpha_lo <= 0.0 || a + b * alpha_hi <= 0.0 {
                    return bad(format!("affine({a},{b}): must be positive on the domain"));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Weight::Exponential { a, b } => write!(f, "exp({a:?},{b:?})"),
            Weight::Power { a, c, k } => write!(f, "power({a:?},{c:?},{k:?})"),
            Weight::Affine { a, b } => write!(f, "affine({a:?},{b:?})"),
        }
    }
}

/// Closed form for `alpha` solving `-z(alpha)/w(alpha) = lambda`, if the pair admits one.
pub(crate) fn closed_form_inverse(w: &Weight, z: &Weight, lambda: f64) -> Option<f64> {
    match (*w, *z) {
        (Weight::Exponential { a: aw, b: bw }, Weight::Exponential { a: az, b: bz })
            if bz != bw =>
        {
            // lambda = -(az/aw) exp((bz - bw) alpha)
            if lambda >= 0.0 {
                return None;
            }
            Some((-lambda * aw / az).ln() / (bz - bw))
        }
        _ => None,
    }
}

/// Whether `z/w -> 0` as `alpha -> +inf` and `z/w -> inf` as `alpha -> -inf`.
///
/// Only an exponential pair with a faster-growing money weight satisfies
/// this; the other families are not positive on the whole real line.
pub(crate) fn ratio_limits_hold(w: &Weight, z: &Weight) -> bool {
    matches!((w, z), (Weight::Exponential { b: bw, .. }, Weight::Exponential { b: bz, .. }) if bz < bw)
}

/// Merit `eta(alpha, beta)`, defined on the whole plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family")]
pub enum Merit {
    /// `a * alpha + b * beta`
    WeightedSum { a: f64, b: f64 },
    /// `beta * exp(c * alpha)`
    Product { c: f64 },
}

impl Merit {
    pub fn eval(&self, alpha: f64, beta: f64) -> f64 {
        match *self {
            Merit::WeightedSum { a, b } => a * alpha + b * beta,
            Merit::Product { c } => beta * (c * alpha).exp(),
        }
    }

    /// `(eta_alpha, eta_beta)`
    pub fn grad(&self, alpha: f64, beta: f64) -> (f64, f64) {
        match *self {
            Merit::WeightedSum { a, b } => (a, b),
            Merit::Product { c } => {
                let e = (c * alpha).exp();
                (c * beta * e, e)
            }
        }
    }

    /// `(eta_aa, eta_ab, eta_bb)`
    pub fn hessian(&self, alpha: f64, beta: f64) -> (f64, f64, f64) {
        match *self {
            Merit::WeightedSum { .. } => (0.0, 0.0, 0.0),
            Merit::Product { c } => {
                let e = (c * alpha).exp();
                (c * c * beta * e, c * e, 0.0)
            }
        }
    }

    /// The `beta` with `eta(alpha, beta) = level`.
    pub fn beta_at_level(&self, alpha: f64, level: f64) -> Option<f64> {
        match *self {
            Merit::WeightedSum { a, b } if b != 0.0 => Some((level - a * alpha) / b),
            Merit::WeightedSum { .. } => None,
            Merit::Product { c } => Some(level * (-c * alpha).exp()),
        }
    }

    /// Slope `d beta / d alpha = -eta_alpha / eta_beta` of the iso-merit curve.
    pub fn iso_slope(&self, alpha: f64, beta: f64) -> f64 {
        let (ea, eb) = self.grad(alpha, beta);
        -ea / eb
    }

    /// Range `(min, max)` of merit over the closed rectangle.
    pub fn range(&self, space: &super::TypeSpace) -> (f64, f64) {
        // both families are monotone in each coordinate, so the extremes are corners;
        // the boundary sample only matters for parameter choices that break that
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in space
            .corners()
            .iter()
            .chain(space.boundary_sample(64).iter())
        {
            let v = self.eval(p.alpha, p.beta);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn check(&self) -> Result<()> {
        let ok = match *self {
            Merit::WeightedSum { a, b } => a.is_finite() && b.is_finite(),
            Merit::Product { c } => c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::MalformedScenario(format!(
                "merit {self}: non-finite parameter"
            )))
        }
    }
}

impl fmt::Display for Merit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Merit::WeightedSum { a, b } => write!(f, "weighted_sum({a:?},{b:?})"),
            Merit::Product { c } => write!(f, "product({c:?})"),
        }
    }
}
