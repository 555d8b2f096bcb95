//! Level-curve tracing inside a type rectangle by predictor-corrector marching.

use crate::error::{Error, Result};
use crate::model::{Bundle, LinearUtility, Merit, NonlinearUtility, Point, TypeSpace};
use crate::numeric::{brent, RootOptions};

/// Scalar fields whose level curves we trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelField {
    Merit(Merit),
    /// `beta / w(alpha)`
    Kappa(LinearUtility),
    /// `U(hi) - U(lo)`: the set of types indifferent between two bundles.
    Indifference {
        utility: NonlinearUtility,
        hi: Bundle,
        lo: Bundle,
    },
}

impl LevelField {
    pub fn value(&self, p: Point) -> f64 {
        match self {
            LevelField::Merit(m) => m.eval(p.alpha, p.beta),
            LevelField::Kappa(u) => p.beta / u.w.value(p.alpha),
            LevelField::Indifference { utility, hi, lo } => {
                utility.eval(p, hi) - utility.eval(p, lo)
            }
        }
    }

    /// `(d/d alpha, d/d beta)`
    pub fn grad(&self, p: Point) -> (f64, f64) {
        match self {
            LevelField::Merit(m) => m.grad(p.alpha, p.beta),
            LevelField::Kappa(u) => {
                let w = u.w.value(p.alpha);
                (-p.beta * u.w.d1(p.alpha) / (w * w), 1.0 / w)
            }
            LevelField::Indifference { utility: u, hi, lo } => {
                let fa = -u.money_alpha_p(p.alpha) * (hi.p - lo.p)
                    - (u.ordeal_alpha(p.alpha, hi.q) - u.ordeal_alpha(p.alpha, lo.q));
                let fb = u.v.v_beta(p.beta, hi.x) - u.v.v_beta(p.beta, lo.x);
                (fa, fb)
            }
        }
    }

    /// Slope `d beta / d alpha` of the level curve through `p`.
    pub fn tangent_slope(&self, p: Point) -> f64 {
        let (fa, fb) = self.grad(p);
        if fb == 0.0 {
            f64::INFINITY
        } else {
            -fa / fb
        }
    }
}

/// A traced level curve, ordered from one end to the other.
#[derive(Debug, Clone)]
pub struct Contour {
    pub level: f64,
    pub points: Vec<Point>,
    /// Whether each end was solved onto the rectangle boundary.
    pub ends_on_boundary: (bool, bool),
    /// Set when marching stopped without reaching the boundary.
    pub escape: Option<String>,
}

impl Contour {
    pub fn arc_length(&self) -> f64 {
        self.points.windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    /// `n` points at arc-length fractions `(i + 1/2)/n`, projected back onto
    /// the level. Exact endpoints (on the closed boundary) are never returned.
    pub fn resample(&self, field: &LevelField, n: usize) -> Vec<Point> {
        if self.points.len() < 2 || n == 0 {
            return self.points.clone();
        }
        self.resample_at(field, (0..n).map(|i| (i as f64 + 0.5) / n as f64))
    }

    /// `n >= 2` points at arc-length fractions `i/(n-1)`, both ends included.
    pub fn sample_inclusive(&self, field: &LevelField, n: usize) -> Vec<Point> {
        if self.points.len() < 2 || n < 2 {
            return self.points.clone();
        }
        let mut out = vec![self.points[0]];
        let inner = self.resample_at(field, (1..n - 1).map(|i| i as f64 / (n - 1) as f64));
        out.extend(inner);
        out.push(*self.points.last().unwrap());
        out
    }

    fn resample_at(&self, field: &LevelField, fractions: impl Iterator<Item = f64>) -> Vec<Point> {
        let mut cum = vec![0.0];
        for w in self.points.windows(2) {
            cum.push(cum.last().unwrap() + dist(w[0], w[1]));
        }
        let total = *cum.last().unwrap();
        let mut j = 0;
        fractions
            .map(|f| {
                let s = total * f;
                while j + 2 < cum.len() && cum[j + 1] < s {
                    j += 1;
                }
                let seg = cum[j + 1] - cum[j];
                let t = if seg > 0.0 { (s - cum[j]) / seg } else { 0.0 };
                let chord = lerp(self.points[j], self.points[j + 1], t);
                correct(field, self.level, chord).unwrap_or(chord)
            })
            .collect()
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a.alpha - b.alpha).hypot(a.beta - b.beta)
}

pub const CORRECTOR_TOL: f64 = 1e-10;

/// Newton steps along the gradient back onto the level.
fn correct(field: &LevelField, level: f64, mut p: Point) -> Option<Point> {
    for _ in 0..60 {
        let r = field.value(p) - level;
        if r.abs() <= CORRECTOR_TOL {
            return Some(p);
        }
        let (ga, gb) = field.grad(p);
        let g2 = ga * ga + gb * gb;
        if !(g2 > 0.0) || !r.is_finite() {
            return None;
        }
        p = Point::new(p.alpha - r * ga / g2, p.beta - r * gb / g2);
    }
    (field.value(p) - level)
        .abs()
        .le(&CORRECTOR_TOL)
        .then_some(p)
}

/// Segments scanned for a seed: both diagonals, then the four edges.
fn seed_segments(space: &TypeSpace) -> Vec<(Point, Point)> {
    let c = space.corners();
    vec![
        (c[0], c[2]),
        (c[3], c[1]),
        (c[0], c[1]),
        (c[1], c[2]),
        (c[2], c[3]),
        (c[3], c[0]),
    ]
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    Point::new(
        a.alpha + t * (b.alpha - a.alpha),
        a.beta + t * (b.beta - a.beta),
    )
}

fn find_seed(field: &LevelField, level: f64, space: &TypeSpace) -> Option<Point> {
    const SCAN: usize = 256;
    for (a, b) in seed_segments(space) {
        let f = |t: f64| field.value(lerp(a, b, t)) - level;
        let mut prev = f(0.0);
        for i in 1..=SCAN {
            let t = i as f64 / SCAN as f64;
            let cur = f(t);
            if prev == 0.0 {
                return Some(lerp(a, b, (i - 1) as f64 / SCAN as f64));
            }
            if prev.signum() != cur.signum() {
                let r = brent(
                    f,
                    (i - 1) as f64 / SCAN as f64,
                    t,
                    RootOptions::default(),
                    "contour seed",
                )
                .ok()?;
                return Some(lerp(a, b, r));
            }
            prev = cur;
        }
    }
    None
}

/// Solves the level on the boundary edge that the segment `inside -> outside` crosses.
fn clip_to_boundary(
    field: &LevelField,
    level: f64,
    space: &TypeSpace,
    inside: Point,
    outside: Point,
) -> Option<Point> {
    // exit parameter along the segment
    let mut t_exit = 1.0f64;
    let d = (outside.alpha - inside.alpha, outside.beta - inside.beta);
    let mut edge = 0;
    let cands = [
        (d.0 < 0.0, (space.alpha_lo - inside.alpha) / d.0, 0),
        (d.0 > 0.0, (space.alpha_hi - inside.alpha) / d.0, 1),
        (d.1 < 0.0, (space.beta_lo - inside.beta) / d.1, 2),
        (d.1 > 0.0, (space.beta_hi - inside.beta) / d.1, 3),
    ];
    for (ok, t, e) in cands {
        if ok && t < t_exit {
            t_exit = t.max(0.0);
            edge = e;
        }
    }
    let exit = lerp(inside, outside, t_exit);
    // parametrise the edge by the free coordinate
    let (lo, hi, at): (f64, f64, Box<dyn Fn(f64) -> Point>) = match edge {
        0 => (
            space.beta_lo,
            space.beta_hi,
            Box::new(|s| Point::new(space.alpha_lo, s)),
        ),
        1 => (
            space.beta_lo,
            space.beta_hi,
            Box::new(|s| Point::new(space.alpha_hi, s)),
        ),
        2 => (
            space.alpha_lo,
            space.alpha_hi,
            Box::new(|s| Point::new(s, space.beta_lo)),
        ),
        _ => (
            space.alpha_lo,
            space.alpha_hi,
            Box::new(|s| Point::new(s, space.beta_hi)),
        ),
    };
    let s0 = if edge < 2 { exit.beta } else { exit.alpha };
    let f = |s: f64| field.value(at(s)) - level;
    // grow a bracket around the exit point, staying on the edge
    let mut w = (hi - lo) * 1e-3;
    for _ in 0..12 {
        let (a, b) = ((s0 - w).max(lo), (s0 + w).min(hi));
        if f(a).signum() != f(b).signum() || f(a) == 0.0 || f(b) == 0.0 {
            let s = brent(f, a, b, RootOptions::default(), "contour clip").ok()?;
            return Some(at(s));
        }
        w *= 2.0;
    }
    None
}

/// Traces `field = level` through the closed rectangle with step `diameter/1000`.
pub fn trace(field: &LevelField, level: f64, space: &TypeSpace) -> Result<Contour> {
    let step = space.diameter() / 1000.0;
    let seed = find_seed(field, level, space)
        .and_then(|p| correct(field, level, p))
        .ok_or_else(|| Error::ContourEscape {
            level,
            reason: "level not attained in the rectangle".into(),
        })?;

    let mut halves = Vec::with_capacity(2);
    let mut ends = [false, false];
    let mut escape = None;
    for (k, sign) in [1.0f64, -1.0].into_iter().enumerate() {
        let mut pts = vec![seed];
        let mut prev_dir: Option<(f64, f64)> = None;
        let max_steps = 200_000;
        let mut reached = false;
        for _ in 0..max_steps {
            let p = *pts.last().unwrap();
            let (ga, gb) = field.grad(p);
            let n = ga.hypot(gb);
            if !(n > 0.0) {
                break;
            }
            let mut d = (-gb / n * sign, ga / n * sign);
            if let Some(pd) = prev_dir {
                if d.0 * pd.0 + d.1 * pd.1 < 0.0 {
                    d = (-d.0, -d.1);
                }
            }
            prev_dir = Some(d);
            let pred = Point::new(p.alpha + step * d.0, p.beta + step * d.1);
            let next = if space.contains_closed(pred) {
                correct(field, level, pred)
            } else {
                None
            };
            match next {
                Some(q) if space.contains_closed(q) => pts.push(q),
                _ => {
                    let outside = if space.contains_closed(pred) {
                        Point::new(p.alpha + 2.0 * step * d.0, p.beta + 2.0 * step * d.1)
                    } else {
                        pred
                    };
                    match clip_to_boundary(field, level, space, p, outside) {
                        Some(b) => {
                            if dist(b, p) > 0.0 {
                                pts.push(b);
                            }
                            reached = true;
                        }
                        None => {
                            escape = Some(format!("could not clip near ({}, {})", p.alpha, p.beta));
                        }
                    }
                    break;
                }
            }
        }
        ends[k] = reached;
        if !reached && escape.is_none() {
            escape = Some("step limit reached".into());
        }
        halves.push(pts);
    }
    let mut points: Vec<Point> = halves[1].iter().rev().copied().collect();
    points.extend(halves[0].iter().skip(1));
    Ok(Contour {
        level,
        points,
        ends_on_boundary: (ends[1], ends[0]),
        escape,
    })
}
