//! Mechanism constructions.

mod conditional;
mod menu;
mod mixture;
mod screening;
mod threshold;

pub use conditional::{build_conditional, ConditionalMechanism};
pub use menu::{
    build_knife_edge_ordeal, build_one_step_ordeal, one_step_ordeal, MenuKind, MenuMechanism,
    KNIFE_EDGE_TOL,
};
pub use mixture::{
    build_mixture, decompose_increasing, reconstruct, reconstruction_bound, Component,
    IncreasingAllocation, Interpolation, MixtureMechanism,
};
pub use screening::{build_payment_screening, PaymentScreening};
pub use threshold::{
    build_certified_threshold, build_threshold, choose_constants, Constants, ThresholdMechanism,
    CURVE_SAMPLES,
};

use crate::contour::LevelField;
use crate::error::{Error, Result};
use crate::model::{Bundle, Grid, MechanismKind, Point, Scenario};
use rayon::prelude::*;

/// A curve across which a closed-form mechanism's allocation jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpCurve {
    pub field: LevelField,
    pub level: f64,
}

/// Bundles stored at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct SampledMechanism {
    pub grid: Grid,
    pub bundles: Vec<Bundle>,
    /// Declared: allocation was computed as a function of merit.
    pub merit_measurable: bool,
    pub observable_alpha: bool,
}

impl SampledMechanism {
    pub fn sample(mech: &Mechanism, grid: &Grid) -> Self {
        SampledMechanism {
            grid: grid.clone(),
            bundles: mech.bundles_on(grid),
            merit_measurable: mech.merit_measurable(),
            observable_alpha: mech.observable_alpha(),
        }
    }

    fn cell(&self, v: f64, lo: f64, h: f64, n: usize) -> (usize, f64) {
        // position in node units, nodes sit at lo + (i + 1/2) h
        let mut s = ((v - lo) / h - 0.5).clamp(0.0, (n - 1) as f64);
        if (s - s.round()).abs() < 1e-9 {
            s = s.round();
        }
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64)
    }

    /// Nearest node's bundle.
    pub fn bundle(&self, t: Point) -> Bundle {
        let g = &self.grid;
        let (ia, fa) = self.cell(t.alpha, g.space.alpha_lo, g.step_alpha(), g.n_alpha);
        let (ib, fb) = self.cell(t.beta, g.space.beta_lo, g.step_beta(), g.n_beta);
        let ia = if fa > 0.5 { ia + 1 } else { ia };
        let ib = if fb > 0.5 { ib + 1 } else { ib };
        self.bundles[g.index(ia, ib)]
    }

    /// Bilinear interpolation of the allocation between nodes.
    pub fn allocation(&self, t: Point) -> f64 {
        let g = &self.grid;
        let (ia, fa) = self.cell(t.alpha, g.space.alpha_lo, g.step_alpha(), g.n_alpha);
        let (ib, fb) = self.cell(t.beta, g.space.beta_lo, g.step_beta(), g.n_beta);
        let x = |i, j| self.bundles[g.index(i, j)].x;
        (1.0 - fa) * ((1.0 - fb) * x(ia, ib) + fb * x(ia, ib + 1))
            + fa * ((1.0 - fb) * x(ia + 1, ib) + fb * x(ia + 1, ib + 1))
    }
}

#[derive(Debug, Clone)]
pub enum Mechanism {
    Threshold(ThresholdMechanism),
    Mixture(MixtureMechanism),
    Conditional(ConditionalMechanism),
    Menu(MenuMechanism),
    PaymentScreening(PaymentScreening),
    Sampled(SampledMechanism),
}

impl Mechanism {
    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Threshold(_) => "threshold",
            Mechanism::Mixture(_) => "mixture",
            Mechanism::Conditional(_) => "conditional",
            Mechanism::Menu(m) => match m.kind {
                MenuKind::KnifeEdge { .. } => "knife_edge",
                MenuKind::OneStep { .. } => "one_step",
            },
            Mechanism::PaymentScreening(_) => "payment_screening",
            Mechanism::Sampled(_) => "sampled",
        }
    }

    pub fn bundle(&self, t: Point) -> Bundle {
        match self {
            Mechanism::Threshold(m) => m.bundle(t),
            Mechanism::Mixture(m) => m.bundle(t),
            Mechanism::Conditional(m) => m.bundle(t),
            Mechanism::Menu(m) => m.bundle(t),
            Mechanism::PaymentScreening(m) => m.bundle(t),
            Mechanism::Sampled(m) => m.bundle(t),
        }
    }

    /// Allocation only; for sampled mechanisms this interpolates between nodes.
    pub fn allocation(&self, t: Point) -> f64 {
        match self {
            Mechanism::Threshold(m) => m.allocation(t),
            Mechanism::Mixture(m) => m.allocation(t),
            Mechanism::Conditional(m) => m.allocation(t),
            Mechanism::Menu(m) => m.bundle(t).x,
            Mechanism::PaymentScreening(m) => m.allocation(t),
            Mechanism::Sampled(m) => m.allocation(t),
        }
    }

    /// True when the allocation is computed from merit alone.
    pub fn merit_measurable(&self) -> bool {
        match self {
            Mechanism::Threshold(_) | Mechanism::Mixture(_) | Mechanism::Conditional(_) => true,
            Mechanism::Menu(m) => m.merit_measurable,
            Mechanism::PaymentScreening(_) => false,
            Mechanism::Sampled(m) => m.merit_measurable,
        }
    }

    /// True when `alpha` is observed, so incentive constraints only bind within an alpha slice.
    pub fn observable_alpha(&self) -> bool {
        match self {
            Mechanism::Conditional(_) => true,
            Mechanism::Sampled(m) => m.observable_alpha,
            _ => false,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Mechanism::Sampled(_))
    }

    pub fn jump_curves(&self) -> Vec<JumpCurve> {
        match self {
            Mechanism::Threshold(m) => vec![JumpCurve {
                field: LevelField::Merit(m.merit),
                level: m.eta_star,
            }],
            Mechanism::Mixture(m) => m
                .components
                .iter()
                .map(|(_, c)| JumpCurve {
                    field: LevelField::Merit(c.merit),
                    level: c.eta_star,
                })
                .collect(),
            Mechanism::Conditional(m) => m
                .xhat
                .jumps()
                .into_iter()
                .map(|e| JumpCurve {
                    field: LevelField::Merit(m.merit),
                    level: e,
                })
                .collect(),
            Mechanism::Menu(m) => {
                let hi = m.items[1];
                vec![JumpCurve {
                    field: LevelField::Indifference {
                        utility: m.utility.nonlinear(f64::INFINITY),
                        hi,
                        lo: m.items[0],
                    },
                    level: 0.0,
                }]
            }
            Mechanism::PaymentScreening(m) => m
                .phi
                .jumps()
                .into_iter()
                .map(|k| JumpCurve {
                    field: LevelField::Kappa(m.utility),
                    level: k,
                })
                .collect(),
            Mechanism::Sampled(_) => Vec::new(),
        }
    }

    /// Bundles at every grid node, in node order.
    pub fn bundles_on(&self, grid: &Grid) -> Vec<Bundle> {
        if let Mechanism::Sampled(s) = self {
            if s.grid == *grid {
                return s.bundles.clone();
            }
        }
        (0..grid.len())
            .into_par_iter()
            .map(|i| self.bundle(grid.node(i)))
            .collect()
    }
}

/// Builds the mechanism described by the scenario's `[mechanism]` section.
pub fn build_from_scenario(s: &Scenario) -> Result<Mechanism> {
    let cfg = &s.mechanism;
    let range = s.merit_range();
    let need = |what: &str| {
        Error::MalformedScenario(format!(
            "mechanism.{what} is required for kind {:?}",
            cfg.kind
        ))
    };
    match cfg.kind {
        MechanismKind::Threshold => {
            let eta = cfg.eta_star.ok_or_else(|| need("eta_star"))?;
            let u = s.utility.linear()?;
            Ok(Mechanism::Threshold(build_certified_threshold(
                u, &s.merit, &s.space, eta, cfg.side, cfg.margin,
            )?))
        }
        MechanismKind::Mixture => {
            let u = s.utility.linear()?;
            let xhat = IncreasingAllocation::from_spec(&cfg.xhat, range)?;
            Ok(Mechanism::Mixture(build_mixture(
                u,
                &s.merit,
                &s.space,
                &xhat,
                cfg.n_components,
                cfg.margin,
            )?))
        }
        MechanismKind::Conditional => {
            let u = s.utility.linear()?;
            let xhat = IncreasingAllocation::from_spec(&cfg.xhat, range)?;
            Ok(Mechanism::Conditional(build_conditional(
                u,
                &s.merit,
                &s.space,
                &xhat,
                cfg.instrument,
            )?))
        }
        MechanismKind::KnifeEdge => {
            let q = cfg.q_star.ok_or_else(|| need("q_star"))?;
            Ok(Mechanism::Menu(build_knife_edge_ordeal(
                s.utility.linear()?,
                &s.merit,
                &s.space,
                q,
            )?))
        }
        MechanismKind::OneStep => {
            let anchor = cfg.anchor.ok_or_else(|| need("anchor_alpha/anchor_beta"))?;
            let x_b = cfg.x_b.ok_or_else(|| need("x_b"))?;
            let q_bar = s
                .q_bar
                .ok_or_else(|| Error::MalformedScenario("utility.q_bar is required".into()))?;
            Ok(Mechanism::Menu(build_one_step_ordeal(
                &s.utility.nonlinear(q_bar),
                anchor,
                x_b,
            )?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_grid, LinearUtility, Merit, Side, TypeSpace, Weight, XhatSpec};

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
    fn single_step_mixture_equals_threshold() {
        let (u, m, s) = s1();
        let xhat =
            IncreasingAllocation::from_spec(&XhatSpec::Step { eta0: 2.0 }, (1.0, 3.0)).unwrap();
        let mix = build_mixture(&u, &m, &s, &xhat, 1, 0.25).unwrap();
        assert_eq!(mix.components.len(), 1);
        let th = build_certified_threshold(&u, &m, &s, 2.0, Side::High, 0.25).unwrap();
        let g = make_grid(s, 9, 9).unwrap();
        for p in g.nodes() {
            let (a, b) = (mix.bundle(p), th.bundle(p));
            assert!((a.x - b.x).abs() + (a.p - b.p).abs() + (a.q - b.q).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_allocation_gives_zero_mechanism() {
        let (u, m, s) = s1();
        let xhat =
            IncreasingAllocation::from_spec(&XhatSpec::Constant { c: 0.0 }, (1.0, 3.0)).unwrap();
        let mix = build_mixture(&u, &m, &s, &xhat, 10, 0.25).unwrap();
        assert!(mix.components.is_empty());
        assert_eq!(mix.bundle(Point::new(0.4, 1.3)), Bundle::ZERO);
    }

    #[test]
    fn sampled_lookup_and_interpolation() {
        let (u, m, s) = s1();
        let th = Mechanism::Threshold(
            build_certified_threshold(&u, &m, &s, 2.0, Side::Low, 0.25).unwrap(),
        );
        let g = make_grid(s, 5, 5).unwrap();
        let sm = SampledMechanism::sample(&th, &g);
        for i in 0..g.len() {
            assert_eq!(sm.bundle(g.node(i)), th.bundle(g.node(i)));
            assert_eq!(sm.allocation(g.node(i)), th.allocation(g.node(i)));
        }
    }
}
