//! Equity-violation angles: how far the directions along which an allocation
//! stays locally constant are from the iso-merit direction.

use crate::construct::{build_one_step_ordeal, JumpCurve, Mechanism};
use crate::contour::trace;
use crate::error::{Error, Result};
use crate::model::{Grid, Instrument, Merit, NonlinearUtility, Point, TypeSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

/// Sampled constancy directions: one per degree over a half turn.
pub const DIRECTIONS: usize = 180;
pub const RESOLUTION_DEG: f64 = 180.0 / DIRECTIONS as f64;
/// Points sampled on each jump curve (boundary ends excluded).
pub const JUMP_SAMPLES: usize = 256;
pub const SLOPE_SAFETY: f64 = 0.05;
/// Difference step for closed-form allocations, relative to the domain diameter.
const CLOSED_FORM_STEP: f64 = 1e-6;

/// Angle of a line with slope `m`, in `[0, pi)`; vertical lines give `pi/2`.
pub fn angle(m: f64) -> f64 {
    if m.is_infinite() {
        FRAC_PI_2
    } else if m >= 0.0 {
        // -0.0 lands here too and maps to +0
        m.atan() + 0.0
    } else {
        // tiny negative slopes round up to a full half turn
        let a = m.atan() + PI;
        if a >= PI {
            0.0
        } else {
            a
        }
    }
}

/// Distance between two line angles, with `d` and `-d` identified.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % PI;
    d.min(PI - d)
}

fn direction_angle(d: (f64, f64)) -> f64 {
    if d.0 == 0.0 {
        FRAC_PI_2
    } else {
        angle(d.1 / d.0)
    }
}

/// Allocation of a mechanism viewed as a field over a grid.
pub struct AllocationField<'a> {
    mech: &'a Mechanism,
    pub grid: Grid,
    /// Difference step along each probed direction.
    pub step: f64,
    /// `(max x - min x) / diameter` over the grid nodes.
    pub scale: f64,
    pub jumps: Vec<JumpCurve>,
}

impl<'a> AllocationField<'a> {
    pub fn new(mech: &'a Mechanism, grid: &Grid) -> Self {
        let xs: Vec<f64> = grid
            .nodes()
            .into_iter()
            .map(|p| mech.allocation(p))
            .collect();
        let range = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let diam = grid.space.diameter();
        let step = if mech.is_closed_form() {
            CLOSED_FORM_STEP * diam
        } else {
            grid.step_alpha().min(grid.step_beta())
        };
        AllocationField {
            mech,
            grid: grid.clone(),
            step,
            scale: range / diam,
            jumps: mech.jump_curves(),
        }
    }

    pub fn x(&self, p: Point) -> f64 {
        self.mech.allocation(p)
    }

    fn flat(&self, t: Point, x0: f64, d: (f64, f64), tol: f64) -> bool {
        let h = self.step;
        let fwd = self.x(Point::new(t.alpha + h * d.0, t.beta + h * d.1)) - x0;
        let bwd = self.x(Point::new(t.alpha - h * d.0, t.beta - h * d.1)) - x0;
        fwd.abs() <= tol && bwd.abs() <= tol
    }

    /// A jump curve passing within two steps of `t`.
    fn jump_near(&self, t: Point) -> Option<&JumpCurve> {
        self.jumps.iter().find(|j| {
            let (ga, gb) = j.field.grad(t);
            (j.field.value(t) - j.level).abs() <= 2.0 * self.step * ga.hypot(gb)
        })
    }

    /// Nodes at which the local violation is evaluated: every node for
    /// closed-form mechanisms, the interior ring otherwise.
    fn evaluated(&self, i: usize) -> bool {
        if self.mech.is_closed_form() {
            return true;
        }
        let (ia, ib) = (i / self.grid.n_beta, i % self.grid.n_beta);
        ia > 0 && ib > 0 && ia + 1 < self.grid.n_alpha && ib + 1 < self.grid.n_beta
    }
}

/// Smallest angle between a direction of local constancy at `t` and the
/// iso-merit direction; infinite when the allocation moves in every direction.
/// On a jump curve the only such direction is the curve's tangent.
pub fn local_violation(field: &AllocationField, merit: &Merit, t: Point, tau: f64) -> f64 {
    let iso = angle(merit.iso_slope(t.alpha, t.beta));
    if let Some(j) = field.jump_near(t) {
        return angle_distance(angle(j.field.tangent_slope(t)), iso);
    }
    let tol = tau * field.scale * field.step;
    let x0 = field.x(t);
    let h = field.step;
    let gx = (field.x(Point::new(t.alpha + h, t.beta)) - field.x(Point::new(t.alpha - h, t.beta)))
        / (2.0 * h);
    let gy = (field.x(Point::new(t.alpha, t.beta + h)) - field.x(Point::new(t.alpha, t.beta - h)))
        / (2.0 * h);
    let unit = |a: f64| (a.cos(), a.sin());
    let mut cands: Vec<(f64, f64)> = (0..DIRECTIONS)
        .map(|k| unit(k as f64 * PI / DIRECTIONS as f64))
        .collect();
    cands.push(unit(iso));
    let g = gx.hypot(gy);
    if g > 0.0 {
        cands.push((-gy / g, gx / g));
    }
    cands
        .into_iter()
        .filter(|&d| field.flat(t, x0, d, tol))
        .map(|d| angle_distance(direction_angle(d), iso))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    Node,
    Jump,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    /// `L`: the largest local violation found.
    pub global: f64,
    pub witness: Option<Point>,
    pub witness_kind: Option<WitnessKind>,
    /// Per-node local violations in node order; NaN where not evaluated.
    pub locals: Vec<f64>,
    pub jump_points: usize,
    pub jump_max: f64,
    pub tau: f64,
    pub resolution_deg: f64,
}

/// Largest violation over grid nodes and over points on the mechanism's jump
/// curves, where the only constancy direction is the curve's tangent.
pub fn global_violation(field: &AllocationField, merit: &Merit, tau: f64) -> ViolationReport {
    let grid = &field.grid;
    let locals: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if field.evaluated(i) {
                local_violation(field, merit, grid.node(i), tau)
            } else {
                f64::NAN
            }
        })
        .collect();
    let mut global = f64::NEG_INFINITY;
    let mut witness = None;
    for (i, &l) in locals.iter().enumerate() {
        if l > global {
            global = l;
            witness = Some((grid.node(i), WitnessKind::Node));
        }
    }
    let mut jump_points = 0;
    let mut jump_max = f64::NEG_INFINITY;
    for j in &field.jumps {
        let Ok(c) = trace(&j.field, j.level, &grid.space) else {
            continue;
        };
        for p in c.resample(&j.field, JUMP_SAMPLES) {
            if !grid.space.contains(p) {
                continue;
            }
            jump_points += 1;
            let l = angle_distance(
                angle(j.field.tangent_slope(p)),
                angle(merit.iso_slope(p.alpha, p.beta)),
            );
            jump_max = jump_max.max(l);
            if l > global {
                global = l;
                witness = Some((p, WitnessKind::Jump));
            }
        }
    }
    ViolationReport {
        global: global.max(0.0),
        witness: witness.map(|w| w.0),
        witness_kind: witness.map(|w| w.1),
        locals,
        jump_points,
        jump_max: jump_max.max(0.0),
        tau,
        resolution_deg: RESOLUTION_DEG,
    }
}

/// Levels on either side of a discontinuity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpData {
    pub x: f64,
    pub x_plus: f64,
    pub q: f64,
    pub q_plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeKind {
    Mrs,
    Diff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Levels {
    Smooth { x: f64, q: f64 },
    Jump(JumpData),
}

type Cost<'a> = Box<dyn Fn(f64) -> f64 + 'a>;

/// Slope of the curve of types sharing a marginal rate (smooth levels) or a
/// jump trade-off (jump levels) between the good and the instrument. With
/// payments the instrument cost is `w(alpha) * t`.
pub fn iso_slopes(
    u: &NonlinearUtility,
    instrument: Instrument,
    t: Point,
    levels: Levels,
) -> Result<(f64, SlopeKind)> {
    let (a, b) = (t.alpha, t.beta);
    let (c, c_a, c_q, c_aq): (Cost, Cost, Cost, Cost) = match instrument {
        Instrument::Ordeals => (
            Box::new(move |q| u.ordeal(a, q)),
            Box::new(move |q| u.ordeal_alpha(a, q)),
            Box::new(move |q| u.ordeal_q(a, q)),
            Box::new(move |q| u.ordeal_alpha_q(a, q)),
        ),
        Instrument::Payments => (
            Box::new(move |p| u.money(a, p)),
            Box::new(move |p| u.money_alpha_p(a) * p),
            Box::new(move |_| u.money_p(a)),
            Box::new(move |_| u.money_alpha_p(a)),
        ),
    };
    match levels {
        Levels::Smooth { x, q } => Ok((
            u.v.v_x(b, x) / c_q(q) * c_aq(q) / u.v.v_beta_x(b, x),
            SlopeKind::Mrs,
        )),
        Levels::Jump(j) => {
            if j.x_plus == j.x || j.q_plus == j.q {
                return Err(Error::DegenerateJump {
                    x: j.x,
                    x_plus: j.x_plus,
                    q: j.q,
                    q_plus: j.q_plus,
                });
            }
            let dv = u.v.v(b, j.x_plus) - u.v.v(b, j.x);
            let dc = c(j.q_plus) - c(j.q);
            let dca = c_a(j.q_plus) - c_a(j.q);
            let dvb = u.v.v_beta(b, j.x_plus) - u.v.v_beta(b, j.x);
            Ok((dv / dc * dca / dvb, SlopeKind::Diff))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeBound {
    /// Largest (closest to zero) sampled ordeal slope.
    pub pre_safety: f64,
    /// `(1 - safety) * pre_safety`
    pub m: f64,
    pub samples: usize,
}

/// Uniform negative bound on ordeal iso-MRS and iso-difference slopes over
/// types on a closed lattice and seeded random levels.
pub fn slope_bound_m(
    u: &NonlinearUtility,
    space: &TypeSpace,
    q_bar: f64,
    n_samples: usize,
    seed: u64,
) -> Result<SlopeBound> {
    let side = (n_samples as f64).sqrt().ceil().max(2.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    let mut count = 0;
    for i in 0..side {
        for j in 0..side {
            let t = Point::new(
                space.alpha_lo + (space.alpha_hi - space.alpha_lo) * i as f64 / (side - 1) as f64,
                space.beta_lo + (space.beta_hi - space.beta_lo) * j as f64 / (side - 1) as f64,
            );
            let x: f64 = rng.gen_range(0.0..1.0);
            let x_plus: f64 = rng.gen_range(x..=1.0);
            let q: f64 = rng.gen_range(0.0..q_bar);
            let mut q_plus = rng.gen_range(0.0..=q_bar);
            if q_plus == q {
                q_plus = q_bar;
            }
            let (s1, _) = iso_slopes(u, Instrument::Ordeals, t, Levels::Smooth { x, q })?;
            best = best.max(s1);
            if x_plus > x {
                let (s2, _) = iso_slopes(
                    u,
                    Instrument::Ordeals,
                    t,
                    Levels::Jump(JumpData {
                        x,
                        x_plus,
                        q,
                        q_plus,
                    }),
                )?;
                best = best.max(s2);
                count += 1;
            }
            count += 1;
        }
    }
    Ok(SlopeBound {
        pre_safety: best,
        m: (1.0 - SLOPE_SAFETY) * best,
        samples: count,
    })
}

/// `min |pi/2 - angle(iso-merit slope)|` over grid nodes: a lower bound on
/// the violation of any non-constant payment-only mechanism.
pub fn payment_lower_bound(merit: &Merit, grid: &Grid) -> f64 {
    grid.nodes()
        .into_iter()
        .map(|p| (FRAC_PI_2 - angle(merit.iso_slope(p.alpha, p.beta))).abs())
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub slope_bound: SlopeBound,
    /// Steepest iso-merit slope on the grid.
    pub steepest_merit_slope: f64,
    pub q_b: f64,
    pub ordeal_violation: ViolationReport,
    pub payment_bound: f64,
    /// `L(one-step ordeal) < payment bound`
    pub verdict: bool,
}

/// Compares the one-step ordeal mechanism through `anchor` with the payment
/// lower bound. Requires every iso-merit slope on the grid to be flatter than `M`.
pub fn compare_instruments(
    u: &NonlinearUtility,
    merit: &Merit,
    grid: &Grid,
    anchor: Point,
    x_b: f64,
    tau: f64,
    seed: u64,
) -> Result<ComparisonReport> {
    let bound = slope_bound_m(u, &grid.space, u.q_bar, 4096, seed)?;
    let steepest = grid
        .nodes()
        .into_iter()
        .map(|p| merit.iso_slope(p.alpha, p.beta))
        .fold(f64::INFINITY, f64::min);
    if !(steepest > bound.m) {
        return Err(Error::NotApplicable(format!(
            "iso-merit slope {steepest} is not flatter than M = {}",
            bound.m
        )));
    }
    let menu = build_one_step_ordeal(u, anchor, x_b)?;
    let q_b = menu.items[1].q;
    let mech = Mechanism::Menu(menu);
    let field = AllocationField::new(&mech, grid);
    let report = global_violation(&field, merit, tau);
    let payment_bound = payment_lower_bound(merit, grid);
    Ok(ComparisonReport {
        slope_bound: bound,
        steepest_merit_slope: steepest,
        q_b,
        verdict: report.global < payment_bound,
        ordeal_violation: report,
        payment_bound,
    })
}
