use crate::contour::{trace, LevelField};
use crate::error::{Error, Result};
use crate::model::{Bundle, Merit, NonlinearUtility, Point, TypeSpace, UtilitySpec};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnifeEdgeReport {
    pub eta_star: f64,
    /// `(max r - min r) / max r` along the iso-merit curve.
    pub dispersion: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub n_samples: usize,
    pub escape: Option<String>,
}

fn check_level(merit: &Merit, space: &TypeSpace, eta_star: f64) -> Result<()> {
    let (lo, hi) = merit.range(space);
    if !(eta_star > lo && eta_star < hi) {
        return Err(Error::BadThreshold { eta_star, lo, hi });
    }
    Ok(())
}

/// Spread of the marginal rate `r = v_x(beta, x) / z_q(alpha, q)` (just
/// `beta / z(alpha)` for linear utility) over the curve `eta = eta_star`,
/// endpoints included. Zero means ordeals alone can pool that curve.
pub fn knife_edge_diagnostic(
    spec: &UtilitySpec,
    merit: &Merit,
    space: &TypeSpace,
    eta_star: f64,
    x: f64,
    q: f64,
    n_samples: usize,
) -> Result<KnifeEdgeReport> {
    check_level(merit, space, eta_star)?;
    let field = LevelField::Merit(*merit);
    let contour = trace(&field, eta_star, space)?;
    let r = |p: Point| match spec {
        UtilitySpec::Linear(u) => p.beta / u.z.value(p.alpha),
        UtilitySpec::Nonlinear(u) => u.v.v_x(p.beta, x) / u.ordeal_q(p.alpha, q),
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in contour.sample_inclusive(&field, n_samples.max(2)) {
        let v = r(p);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(KnifeEdgeReport {
        eta_star,
        dispersion: (hi - lo) / hi,
        r_min: lo,
        r_max: hi,
        n_samples: n_samples.max(2),
        escape: contour.escape,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPointReport {
    pub eta_star: f64,
    /// `max |U(a) - U(b)|` over the curve; zero when every type on it is indifferent.
    pub max_abs_gap: f64,
    pub gap_spread: f64,
    pub n_samples: usize,
}

/// Second case of the ordeal-only condition for a declared pair of
/// payment-free bundles: are all types on `eta = eta_star` indifferent between them?
pub fn two_point_diagnostic(
    u: &NonlinearUtility,
    merit: &Merit,
    space: &TypeSpace,
    eta_star: f64,
    a: Bundle,
    b: Bundle,
    n_samples: usize,
) -> Result<TwoPointReport> {
    check_level(merit, space, eta_star)?;
    if a.x == b.x {
        return Err(Error::InvalidArgument(
            "two-point menu needs x_a != x_b".into(),
        ));
    }
    let field = LevelField::Merit(*merit);
    let contour = trace(&field, eta_star, space)?;
    let a = Bundle::new(a.x, 0.0, a.q);
    let b = Bundle::new(b.x, 0.0, b.q);
    let (mut lo, mut hi, mut abs) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for p in contour.sample_inclusive(&field, n_samples.max(2)) {
        let d = u.eval(p, &a) - u.eval(p, &b);
        lo = lo.min(d);
        hi = hi.max(d);
        abs = abs.max(d.abs());
    }
    Ok(TwoPointReport {
        eta_star,
        max_abs_gap: abs,
        gap_spread: hi - lo,
        n_samples: n_samples.max(2),
    })
}
