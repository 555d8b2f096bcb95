use super::family::ratio_limits_hold;
use super::{make_grid, Grid, Merit, Point, TypeSpace, UtilitySpec};
use crate::error::Result;
use crate::numeric::linspace;
use serde::Serialize;

/// Allocation at exactly the threshold merit: `Low` gives 0, `High` gives 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Low,
    High,
}

/// Screening instrument for single-instrument constructions and probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Instrument {
    #[default]
    Payments,
    Ordeals,
}

/// Target allocation as a function of merit.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XhatSpec {
    /// Linear from 0 at the lowest merit to 1 at the highest.
    Ramp,
    /// `1{eta >= eta0}`
    Step {
        eta0: f64,
    },
    Constant {
        c: f64,
    },
    /// Piecewise linear through `(eta, x)` knots, flat outside.
    LinearTable {
        knots: Vec<(f64, f64)>,
    },
    /// Right-continuous steps: `x` from each knot's `eta` onwards.
    StepTable {
        knots: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Threshold,
    #[default]
    Mixture,
    Conditional,
    KnifeEdge,
    OneStep,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MechanismConfig {
    pub kind: MechanismKind,
    pub eta_star: Option<f64>,
    pub side: Side,
    pub xhat: XhatSpec,
    pub n_components: usize,
    pub margin: f64,
    pub instrument: Instrument,
    pub q_star: Option<f64>,
    pub anchor: Option<Point>,
    pub x_b: Option<f64>,
}

impl Default for MechanismConfig {
    fn default() -> Self {
        MechanismConfig {
            kind: MechanismKind::Mixture,
            eta_star: None,
            side: Side::Low,
            xhat: XhatSpec::Ramp,
            n_components: 100,
            margin: 0.25,
            instrument: Instrument::Payments,
            q_star: None,
            anchor: None,
            x_b: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub n_alpha: usize,
    pub n_beta: usize,
    pub n_levels: usize,
    pub instrument: Instrument,
    /// Contour points added on every interior class boundary.
    pub edge_points: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            n_alpha: 6,
            n_beta: 6,
            n_levels: 5,
            instrument: Instrument::Payments,
            edge_points: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub ic: f64,
    pub ir: f64,
    pub equity: f64,
    pub monotone: f64,
    pub convexity: f64,
    pub equity_bins: usize,
    pub convexity_trials: usize,
    /// Directional differences below `tau * (x range) / diameter` count as flat.
    pub tau: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ic: 1e-8,
            ir: 1e-9,
            equity: 1e-12,
            monotone: 1e-9,
            convexity: 1e-9,
            equity_bins: 20,
            convexity_trials: 100_000,
            tau: 1e-3,
        }
    }
}

/// A complete problem instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub space: TypeSpace,
    pub utility: UtilitySpec,
    pub merit: Merit,
    /// Ordeal cap; required by the fairness comparison.
    pub q_bar: Option<f64>,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub tolerances: Tolerances,
    pub mechanism: MechanismConfig,
    pub probe: ProbeConfig,
}

impl Scenario {
    /// A scenario with default settings around the given primitives.
    pub fn new(space: TypeSpace, utility: UtilitySpec, merit: Merit) -> Self {
        let q_bar = match utility {
            UtilitySpec::Nonlinear(u) => Some(u.q_bar),
            UtilitySpec::Linear(_) => None,
        };
        Scenario {
            space,
            utility,
            merit,
            q_bar,
            n_alpha: 41,
            n_beta: 41,
            tolerances: Tolerances::default(),
            mechanism: MechanismConfig::default(),
            probe: ProbeConfig::default(),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        make_grid(self.space, self.n_alpha, self.n_beta)
    }

    pub fn merit_range(&self) -> (f64, f64) {
        self.merit.range(&self.space)
    }

    /// Family parameters against their admissible sets.
    pub fn check_parameters(&self) -> Result<()> {
        let (lo, hi) = (self.space.alpha_lo, self.space.alpha_hi);
        match &self.utility {
            UtilitySpec::Linear(u) => {
                u.w.check(lo, hi)?;
                u.z.check(lo, hi)?;
            }
            UtilitySpec::Nonlinear(u) => u.check(lo, hi)?,
        }
        self.merit.check()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Worst sampled value of the checked quantity.
    pub value: f64,
    pub witness: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
    pub merit_range: (f64, f64),
    /// Smallest sampled `min(eta_alpha, eta_beta)`.
    pub merit_gradient_floor: f64,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&ValidationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Sign check over a sample: keeps the value closest to failing and the
/// first failing point.
fn sign_check<F>(name: &'static str, pts: &[Point], positive: bool, f: F) -> ValidationCheck
where
    F: Fn(Point) -> f64,
{
    let mut worst = if positive {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let mut witness = None;
    for &p in pts {
        let v = f(p);
        let ok = if positive { v > 0.0 } else { v < 0.0 };
        if !ok && witness.is_none() {
            witness = Some(p);
        }
        worst = if positive { worst.min(v) } else { worst.max(v) };
    }
    ValidationCheck {
        name,
        pass: witness.is_none(),
        value: worst,
        witness,
    }
}

/// Checks the standing assumptions on a 33 x 33 sample of the closed rectangle.
pub fn validate_scenario(s: &Scenario) -> Result<ValidationReport> {
    s.check_parameters()?;
    let sp = &s.space;
    let alphas = linspace(sp.alpha_lo, sp.alpha_hi, 33);
    let betas = linspace(sp.beta_lo, sp.beta_hi, 33);
    let pts: Vec<Point> = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| Point::new(a, b)))
        .collect();
    let w = *s.utility.w();
    let z = *s.utility.z();

    let mut checks = vec![
        sign_check("w>0", &pts, true, |p| w.value(p.alpha)),
        sign_check("z>0", &pts, true, |p| z.value(p.alpha)),
        sign_check("w'>0", &pts, true, |p| w.d1(p.alpha)),
        sign_check("z'<0", &pts, false, |p| z.d1(p.alpha)),
    ];

    match &s.utility {
        UtilitySpec::Linear(u) => {
            let ok = ratio_limits_hold(&u.w, &u.z);
            checks.push(ValidationCheck {
                name: "z/w limits",
                pass: ok,
                value: if ok { 1.0 } else { 0.0 },
                witness: None,
            });
        }
        UtilitySpec::Nonlinear(u) => {
            // levels x in [0,1], q in [0, q_bar] on a coarse sub-sample
            let xs = linspace(0.0, 1.0, 9);
            let qs = linspace(0.0, u.q_bar, 9);
            let sub: Vec<Point> = pts.iter().step_by(7).copied().collect();
            let over_x = |f: &dyn Fn(Point, f64) -> f64, p: Point| {
                xs.iter().map(|&x| f(p, x)).fold(f64::INFINITY, f64::min)
            };
            let over_q = |f: &dyn Fn(Point, f64) -> f64, p: Point, pos: bool| {
                let it = qs.iter().map(|&q| f(p, q));
                if pos {
                    it.fold(f64::INFINITY, f64::min)
                } else {
                    it.fold(f64::NEG_INFINITY, f64::max)
                }
            };
            checks.push(sign_check("v_x>0", &sub, true, |p| {
                over_x(&|p, x| u.v.v_x(p.beta, x), p)
            }));
            checks.push(sign_check("v_bx>0", &sub, true, |p| {
                over_x(&|p, x| u.v.v_beta_x(p.beta, x), p)
            }));
            checks.push(sign_check("z_q>0", &sub, true, |p| {
                over_q(&|p, q| u.ordeal_q(p.alpha, q), p, true)
            }));
            checks.push(sign_check("z_aq<0", &sub, false, |p| {
                over_q(&|p, q| u.ordeal_alpha_q(p.alpha, q), p, false)
            }));
            let zero = pts
                .iter()
                .map(|p| {
                    u.v.v(p.beta, 0.0).abs()
                        + u.money(p.alpha, 0.0).abs()
                        + u.ordeal(p.alpha, 0.0).abs()
                })
                .fold(0.0, f64::max);
            checks.push(ValidationCheck {
                name: "zero at origin",
                pass: zero == 0.0,
                value: zero,
                witness: None,
            });
        }
    }

    let m = s.merit;
    checks.push(sign_check("eta_alpha>0", &pts, true, |p| {
        m.grad(p.alpha, p.beta).0
    }));
    checks.push(sign_check("eta_beta>0", &pts, true, |p| {
        m.grad(p.alpha, p.beta).1
    }));
    let floor = pts
        .iter()
        .map(|p| {
            let (a, b) = m.grad(p.alpha, p.beta);
            a.min(b)
        })
        .fold(f64::INFINITY, f64::min);

    Ok(ValidationReport {
        checks,
        merit_range: s.merit_range(),
        merit_gradient_floor: floor,
    })
}
