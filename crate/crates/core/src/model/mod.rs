//! Economic primitives: types, bundles, grids, utility and merit families.

mod family;
mod scenario;
mod utility;

pub(crate) use family::closed_form_inverse as family_closed_form_inverse;
pub use family::{Merit, Weight};
pub use scenario::{
    validate_scenario, Instrument, MechanismConfig, MechanismKind, ProbeConfig, Scenario, Side,
    Tolerances, ValidationCheck, ValidationReport, XhatSpec,
};
pub use utility::{GoodValue, LinearUtility, NonlinearUtility, OrdealCost, UtilitySpec};

use crate::error::{Error, Result};
use serde::Serialize;

/// An agent type: need for money `alpha` and need for the good `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub alpha: f64,
    pub beta: f64,
}

impl Point {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Point { alpha, beta }
    }
}

/// Allocation `x`, payment `p` and ordeal `q` offered to one type.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Bundle {
    pub x: f64,
    pub p: f64,
    pub q: f64,
}

impl Bundle {
    pub const ZERO: Bundle = Bundle {
        x: 0.0,
        p: 0.0,
        q: 0.0,
    };

    pub fn new(x: f64, p: f64, q: f64) -> Self {
        Bundle { x, p, q }
    }

    /// `c * self + (1 - c) * other`.
    pub fn lerp(&self, other: &Bundle, c: f64) -> Bundle {
        Bundle {
            x: c * self.x + (1.0 - c) * other.x,
            p: c * self.p + (1.0 - c) * other.p,
            q: c * self.q + (1.0 - c) * other.q,
        }
    }
}

/// Open rectangle `(alpha_lo, alpha_hi) x (beta_lo, beta_hi)` of types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeSpace {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
}

impl TypeSpace {
    pub fn new(alpha_lo: f64, alpha_hi: f64, beta_lo: f64, beta_hi: f64) -> Result<Self> {
        let finite = [alpha_lo, alpha_hi, beta_lo, beta_hi]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(alpha_lo < alpha_hi) {
            return Err(Error::MalformedScenario(format!(
                "need alpha_lo < alpha_hi, got ({alpha_lo}, {alpha_hi})"
            )));
        }
        if !(0.0 < beta_lo && beta_lo < beta_hi) {
            return Err(Error::MalformedScenario(format!(
                "need 0 < beta_lo < beta_hi, got ({beta_lo}, {beta_hi})"
            )));
        }
        Ok(TypeSpace {
            alpha_lo,
            alpha_hi,
            beta_lo,
            beta_hi,
        })
    }

    pub fn contains(&self, p: Point) -> bool {
        p.alpha > self.alpha_lo
            && p.alpha < self.alpha_hi
            && p.beta > self.beta_lo
            && p.beta < self.beta_hi
    }

    /// Membership in the closed rectangle.
    pub fn contains_closed(&self, p: Point) -> bool {
        p.alpha >= self.alpha_lo
            && p.alpha <= self.alpha_hi
            && p.beta >= self.beta_lo
            && p.beta <= self.beta_hi
    }

    pub fn diameter(&self) -> f64 {
        (self.alpha_hi - self.alpha_lo).hypot(self.beta_hi - self.beta_lo)
    }

    /// Corners in the order (lo,lo), (hi,lo), (hi,hi), (lo,hi).
    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.alpha_lo, self.beta_lo),
            Point::new(self.alpha_hi, self.beta_lo),
            Point::new(self.alpha_hi, self.beta_hi),
            Point::new(self.alpha_lo, self.beta_hi),
        ]
    }

    /// `n` points per edge walking the closed boundary.
    pub fn boundary_sample(&self, n: usize) -> Vec<Point> {
        let n = n.max(2);
        let mut out = Vec::with_capacity(4 * n);
        let c = self.corners();
        for k in 0..4 {
            let (a, b) = (c[k], c[(k + 1) % 4]);
            for i in 0..n {
                let t = i as f64 / n as f64;
                out.push(Point::new(
                    a.alpha + t * (b.alpha - a.alpha),
                    a.beta + t * (b.beta - a.beta),
                ));
            }
        }
        out
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.alpha_lo + self.alpha_hi),
            0.5 * (self.beta_lo + self.beta_hi),
        )
    }
}

/// Uniform grid inset half a step from the boundary of a [`TypeSpace`].
///
/// Nodes are ordered row-major with alpha as the outer index:
/// `index = i_alpha * n_beta + i_beta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub space: TypeSpace,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

/// Builds the inset grid; both counts must be at least 2.
pub fn make_grid(space: TypeSpace, n_alpha: usize, n_beta: usize) -> Result<Grid> {
    if n_alpha < 2 || n_beta < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 nodes per axis, got {n_alpha} x {n_beta}"
        )));
    }
    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        let h = (hi - lo) / n as f64;
        (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect()
    };
    Ok(Grid {
        space,
        n_alpha,
        n_beta,
        alphas: axis(space.alpha_lo, space.alpha_hi, n_alpha),
        betas: axis(space.beta_lo, space.beta_hi, n_beta),
    })
}

impl Grid {
    pub fn len(&self) -> usize {
        self.n_alpha * self.n_beta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, index: usize) -> Point {
        Point::new(
            self.alphas[index / self.n_beta],
            self.betas[index % self.n_beta],
        )
    }

    pub fn index(&self, i_alpha: usize, i_beta: usize) -> usize {
        i_alpha * self.n_beta + i_beta
    }

    pub fn nodes(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn step_alpha(&self) -> f64 {
        (self.space.alpha_hi - self.space.alpha_lo) / self.n_alpha as f64
    }

    pub fn step_beta(&self) -> f64 {
        (self.space.beta_hi - self.space.beta_lo) / self.n_beta as f64
    }
}
