use crate::error::{Error, Result};
use crate::model::{Bundle, LinearUtility, Merit, Point, Side, TypeSpace};
use crate::numeric::linspace;
use crate::reparam::{
    alpha_of_lambda, bounding_rectangle, curvature_bounds, kappa_star_derivatives, to_kl,
    CurvatureBounds, ReparamRectangle, ThresholdCurve,
};
use serde::Serialize;

/// Samples used for curvature bounds and the exported threshold curve.
pub const CURVE_SAMPLES: usize = 401;

/// Slope constant `psi` and curvature constant `zeta` of the ordeal rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub psi: f64,
    pub zeta: f64,
}

/// `zeta = max(M2, 1e-6) * (1 + margin)`, `psi = M1 + zeta * span + 1`.
pub fn choose_constants(
    bounds: &CurvatureBounds,
    rect: &ReparamRectangle,
    margin: f64,
) -> Constants {
    let zeta = bounds.m2.max(1e-6) * (1.0 + margin);
    Constants {
        psi: bounds.m1 + zeta * rect.lambda_span() + 1.0,
        zeta,
    }
}

/// Threshold rule `x = 1{eta > eta*}` (or `>=` on the high side) implemented
/// with payments and ordeals through a convex indirect utility
///
/// `V(k, l) = max(0, k - k*(l)) + zeta l^2 / 2 + l (psi - zeta l_hi)`
///
/// whose gradient is `(x, q)`. Payments follow from `p = k x + l q - (V + shift)`.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdMechanism {
    pub utility: LinearUtility,
    pub merit: Merit,
    pub eta_star: f64,
    pub side: Side,
    pub constants: Constants,
    pub bounds: Option<CurvatureBounds>,
    pub rect: ReparamRectangle,
    /// `-min V` over the rectangle; indirect utility is `V + payment_shift >= 0`.
    pub payment_shift: f64,
}

impl ThresholdMechanism {
    fn allocate(&self, above: bool, at: bool) -> f64 {
        match (above, at, self.side) {
            (true, _, _) => 1.0,
            (false, true, Side::High) => 1.0,
            _ => 0.0,
        }
    }

    /// `(kappa*, kappa*')` at the lambda of `alpha`.
    fn curve_at(&self, alpha: f64) -> (f64, f64) {
        kappa_star_derivatives(&self.utility, &self.merit, self.eta_star, alpha)
            .map(|(k, k1, _)| (k, k1))
            .unwrap_or((f64::NAN, f64::NAN))
    }

    fn ordeal(&self, lambda: f64, x: f64, k1: f64) -> f64 {
        let Constants { psi, zeta } = self.constants;
        psi - zeta * self.rect.lambda_hi + zeta * lambda - k1 * x
    }

    fn v_raw(&self, kappa: f64, lambda: f64, kstar: f64) -> f64 {
        let Constants { psi, zeta } = self.constants;
        (kappa - kstar).max(0.0)
            + 0.5 * zeta * lambda * lambda
            + lambda * (psi - zeta * self.rect.lambda_hi)
    }

    /// Unshifted `V(kappa, lambda)`.
    pub fn v(&self, kappa: f64, lambda: f64) -> Result<f64> {
        let a = alpha_of_lambda(&self.utility, lambda)?;
        Ok(self.v_raw(kappa, lambda, self.curve_at(a).0))
    }

    /// `(x, q)`: the subgradient of `V` used by the mechanism.
    pub fn subgradient(&self, kappa: f64, lambda: f64) -> Result<(f64, f64)> {
        let a = alpha_of_lambda(&self.utility, lambda)?;
        let (k, k1) = self.curve_at(a);
        let x = self.allocate(kappa > k, kappa == k);
        Ok((x, self.ordeal(lambda, x, k1)))
    }

    pub fn allocation(&self, t: Point) -> f64 {
        let eta = self.merit.eval(t.alpha, t.beta);
        self.allocate(eta > self.eta_star, eta == self.eta_star)
    }

    pub fn bundle(&self, t: Point) -> Bundle {
        let x = self.allocation(t);
        let (kappa, lambda) = to_kl(&self.utility, t);
        let (k, k1) = self.curve_at(t.alpha);
        let q = self.ordeal(lambda, x, k1);
        let v = self.v_raw(kappa, lambda, k) + self.payment_shift;
        Bundle::new(x, kappa * x + lambda * q - v, q)
    }

    /// Tabulated threshold curve over the rectangle's lambda range.
    pub fn curve(&self, n: usize) -> Result<ThresholdCurve> {
        ThresholdCurve::build(
            &self.utility,
            &self.merit,
            self.eta_star,
            self.rect.lambda_lo,
            self.rect.lambda_hi,
            n,
        )
    }
}

/// Builds a threshold mechanism with the given constants; `eta_star` must lie
/// strictly inside the merit range of `space`.
pub fn build_threshold(
    u: &LinearUtility,
    merit: &Merit,
    space: &TypeSpace,
    eta_star: f64,
    side: Side,
    constants: Constants,
) -> Result<ThresholdMechanism> {
    let (lo, hi) = merit.range(space);
    if !(eta_star > lo && eta_star < hi) {
        return Err(Error::BadThreshold { eta_star, lo, hi });
    }
    assemble(u, merit, space, eta_star, side, constants, None)
}

/// Threshold mechanism with constants certified from the curvature bounds.
pub fn build_certified_threshold(
    u: &LinearUtility,
    merit: &Merit,
    space: &TypeSpace,
    eta_star: f64,
    side: Side,
    margin: f64,
) -> Result<ThresholdMechanism> {
    let (lo, hi) = merit.range(space);
    if !(eta_star > lo && eta_star < hi) {
        return Err(Error::BadThreshold { eta_star, lo, hi });
    }
    certified_unchecked(u, merit, space, eta_star, side, margin)
}

/// As [`build_certified_threshold`] but also accepts the closed merit range,
/// as mixtures need thresholds at both ends.
pub(crate) fn certified_unchecked(
    u: &LinearUtility,
    merit: &Merit,
    space: &TypeSpace,
    eta_star: f64,
    side: Side,
    margin: f64,
) -> Result<ThresholdMechanism> {
    let rect = bounding_rectangle(u, space);
    let bounds = curvature_bounds(
        u,
        merit,
        eta_star,
        rect.lambda_lo,
        rect.lambda_hi,
        CURVE_SAMPLES,
    )?;
    let constants = choose_constants(&bounds, &rect, margin);
    assemble(u, merit, space, eta_star, side, constants, Some(bounds))
}

fn assemble(
    u: &LinearUtility,
    merit: &Merit,
    space: &TypeSpace,
    eta_star: f64,
    side: Side,
    constants: Constants,
    bounds: Option<CurvatureBounds>,
) -> Result<ThresholdMechanism> {
    let rect = bounding_rectangle(u, space);
    let mut m = ThresholdMechanism {
        utility: *u,
        merit: *merit,
        eta_star,
        side,
        constants,
        bounds,
        rect,
        payment_shift: 0.0,
    };
    // V is nondecreasing in kappa, so its minimum lies on kappa = kappa_lo;
    // with certified constants it is increasing in lambda too and the
    // minimum is the corner, which the sample includes
    let mut min_v = f64::INFINITY;
    for l in linspace(rect.lambda_lo, rect.lambda_hi, 2001) {
        min_v = min_v.min(m.v(rect.kappa_lo, l)?);
    }
    m.payment_shift = -min_v;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Weight;

    fn s1() -> (LinearUtility, Merit, TypeSpace) {
        (
            LinearUtility::new(
                Weight::Exponential { a: 1.0, b: 1.0 },
                Weight::Exponential { a: 1.0, b: -1.0 },
            ),
            Merit::WeightedSum { a: 1.0, b: 1.0 },
            TypeSpace::new(0.0, 1.0, 1.0, 2.0).unwrap(),
        )
    }

    #[test]
    fn constants_formula() {
        let b = CurvatureBounds {
            m1: 0.0,
            m2: 0.0,
            max_d1: 0.0,
            max_d2: 0.0,
            argmax_d1: 0.0,
            argmax_d2: 0.0,
        };
        let rect = ReparamRectangle {
            kappa_lo: 0.0,
            kappa_hi: 1.0,
            lambda_lo: -1.0,
            lambda_hi: -0.5,
        };
        let c = choose_constants(&b, &rect, 0.25);
        assert!((c.zeta - 1.25e-6).abs() < 1e-20);
        assert_eq!(c.psi, 1.0 + c.zeta * 0.5);
    }

    #[test]
    fn s1_certified_constants() {
        let (u, m, s) = s1();
        let t = build_certified_threshold(&u, &m, &s, 2.0, Side::Low, 0.25).unwrap();
        let c = t.constants;
        assert!((c.zeta - 7.84591).abs() < 1e-4, "{c:?}");
        assert!((c.psi - 11.18194).abs() < 1e-4, "{c:?}");
        assert!(c.zeta > t.bounds.unwrap().m2);
    }

    #[test]
    fn ordeal_and_v_below_threshold() {
        let (u, m, s) = s1();
        let mut t = build_certified_threshold(&u, &m, &s, 2.0, Side::Low, 0.25).unwrap();
        t.constants = Constants {
            psi: 5.0,
            zeta: 2.0,
        };
        t.rect.lambda_hi = -0.1;
        assert!((t.ordeal(-1.0, 0.0, 123.0) - 3.2).abs() < 1e-12);
        // kappa far below the curve: max term inactive
        assert!((t.v_raw(-10.0, -1.0, 0.0) - -4.2).abs() < 1e-12);
    }

    #[test]
    fn allocation_by_merit() {
        let (u, m, s) = s1();
        let t = build_certified_threshold(&u, &m, &s, 2.0, Side::Low, 0.25).unwrap();
        assert_eq!(t.allocation(Point::new(0.5, 1.6)), 1.0);
        assert_eq!(t.allocation(Point::new(0.5, 1.4)), 0.0);
        assert_eq!(t.allocation(Point::new(0.5, 1.5)), 0.0);
        let h = build_certified_threshold(&u, &m, &s, 2.0, Side::High, 0.25).unwrap();
        assert_eq!(h.allocation(Point::new(0.5, 1.5)), 1.0);
    }

    #[test]
    fn out_of_range_threshold() {
        let (u, m, s) = s1();
        let e = build_certified_threshold(&u, &m, &s, 3.5, Side::Low, 0.25).unwrap_err();
        assert_eq!(
            e,
            Error::BadThreshold {
                eta_star: 3.5,
                lo: 1.0,
                hi: 3.0
            }
        );
        assert!(build_certified_threshold(&u, &m, &s, 1.0, Side::Low, 0.25).is_err());
    }

    #[test]
    fn bundle_matches_reparametrised_formulas() {
        let (u, m, s) = s1();
        let t = build_certified_threshold(&u, &m, &s, 2.0, Side::Low, 0.25).unwrap();
        let p = Point::new(0.3, 1.9);
        let b = t.bundle(p);
        let (k, l) = to_kl(&u, p);
        let (x, q) = t.subgradient(k, l).unwrap();
        assert_eq!(b.x, x);
        assert!((b.q - q).abs() < 1e-12);
        // indirect utility in reparametrised units is V + shift
        let ind = k * b.x + l * b.q - b.p;
        assert!((ind - (t.v(k, l).unwrap() + t.payment_shift)).abs() < 1e-12);
        assert!(ind >= 0.0);
    }
}
