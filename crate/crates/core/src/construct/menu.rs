use crate::error::{Error, Result};
use crate::model::{Bundle, LinearUtility, Merit, NonlinearUtility, Point, TypeSpace, UtilitySpec};
use crate::numeric::{brent, expand_bracket, RootOptions};
use crate::verify::knife_edge_diagnostic;
use serde::Serialize;

/// Utility differences within this band count as ties; ties go to the larger allocation.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MenuKind {
    KnifeEdge { q_star: f64 },
    OneStep { anchor: Point, x_b: f64, q_b: f64 },
}

/// A finite menu; every type picks its utility-maximising item.
#[derive(Debug, Clone, Serialize)]
pub struct MenuMechanism {
    pub utility: UtilitySpec,
    pub items: Vec<Bundle>,
    pub kind: MenuKind,
    pub merit_measurable: bool,
}

impl MenuMechanism {
    pub fn choice(&self, t: Point) -> usize {
        let mut best = 0;
        let mut best_u = self.utility.eval(t, &self.items[0]);
        for (i, b) in self.items.iter().enumerate().skip(1) {
            let u = self.utility.eval(t, b);
            let better =
                u > best_u + TIE_TOL || (u >= best_u - TIE_TOL && b.x > self.items[best].x);
            if better {
                best = i;
                best_u = u;
            }
        }
        best
    }

    pub fn bundle(&self, t: Point) -> Bundle {
        self.items[self.choice(t)]
    }
}

/// Levels at which alignment of merit with `beta / z(alpha)` is checked.
const ALIGNMENT_LEVELS: usize = 7;
pub const KNIFE_EDGE_TOL: f64 = 1e-8;

/// Posted ordeal `{0, (1, 0, q*)}`; requires merit to be a monotone transform
/// of `beta / z(alpha)`, so that acceptance is decided by merit alone.
pub fn build_knife_edge_ordeal(
    u: &LinearUtility,
    merit: &Merit,
    space: &TypeSpace,
    q_star: f64,
) -> Result<MenuMechanism> {
    if !(q_star > 0.0 && q_star.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "q* = {q_star}: need a positive ordeal"
        )));
    }
    let spec = UtilitySpec::Linear(*u);
    let (lo, hi) = merit.range(space);
    let mut worst: f64 = 0.0;
    for j in 1..=ALIGNMENT_LEVELS {
        let level = lo + (hi - lo) * j as f64 / (ALIGNMENT_LEVELS + 1) as f64;
        let d = knife_edge_diagnostic(&spec, merit, space, level, 0.0, 0.0, 64)?;
        worst = worst.max(d.dispersion);
    }
    if !(worst <= KNIFE_EDGE_TOL) {
        return Err(Error::NotKnifeEdge {
            dispersion: worst,
            tolerance: KNIFE_EDGE_TOL,
        });
    }
    Ok(MenuMechanism {
        utility: spec,
        items: vec![Bundle::ZERO, Bundle::new(1.0, 0.0, q_star)],
        kind: MenuKind::KnifeEdge { q_star },
        merit_measurable: true,
    })
}

/// Ordeal `q_b` that leaves the anchor indifferent: `v(beta_b, x_b) = z(alpha_b, q_b)`.
pub fn one_step_ordeal(u: &NonlinearUtility, anchor: Point, x_b: f64) -> Result<f64> {
    let target = u.v.v(anchor.beta, x_b);
    let f = |q: f64| u.ordeal(anchor.alpha, q) - target;
    let (lo, hi) = expand_bracket(f, |q| q >= 0.0, 0.0, 1.0, 200).ok_or(Error::NoConvergence {
        what: "one-step ordeal",
        iterations: 200,
    })?;
    brent(f, lo, hi, RootOptions::default(), "one-step ordeal")
}

/// Menu `{0, (x_b, 0, q_b)}` with the anchor type indifferent between the two.
pub fn build_one_step_ordeal(
    u: &NonlinearUtility,
    anchor: Point,
    x_b: f64,
) -> Result<MenuMechanism> {
    if !(x_b > 0.0 && x_b <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "x_b = {x_b}: need 0 < x_b <= 1"
        )));
    }
    let q_b = one_step_ordeal(u, anchor, x_b)?;
    if q_b > u.q_bar {
        return Err(Error::OrdealCapExceeded {
            q_b,
            q_bar: u.q_bar,
        });
    }
    Ok(MenuMechanism {
        utility: UtilitySpec::Nonlinear(*u),
        items: vec![Bundle::ZERO, Bundle::new(x_b, 0.0, q_b)],
        kind: MenuKind::OneStep { anchor, x_b, q_b },
        merit_measurable: false,
    })
}
