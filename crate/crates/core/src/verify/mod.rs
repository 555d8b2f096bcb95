//! Brute-force checks of incentive compatibility, participation, equity and
//! monotonicity, plus the convexity certificate, single-instrument probes and
//! the knife-edge diagnostics.

mod convexity;
mod diagnostic;
mod probe;

pub use convexity::{check_convexity, check_convexity_in, ConvexityReport};
pub use diagnostic::{
    knife_edge_diagnostic, two_point_diagnostic, KnifeEdgeReport, TwoPointReport,
};
pub use probe::{probe_single_instrument, ProbeMode, ProbeOptions, ProbeResult};

use crate::construct::Mechanism;
use crate::contour::{trace, LevelField};
use crate::error::{Error, Result};
use crate::model::{Grid, Merit, Point, Tolerances, UtilitySpec};
use rayon::prelude::*;
use serde::Serialize;

/// Points per traced iso-merit curve in exact equity mode.
pub const EQUITY_CONTOUR_SAMPLES: usize = 64;
/// Offset of the traced level inside each merit bin (golden-section fraction,
/// so levels avoid rational grid coincidences).
const LEVEL_OFFSET: f64 = 0.618034;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcReport {
    pub max_gain: f64,
    /// `(type, deviation target)` attaining `max_gain`, when positive.
    pub witness: Option<(Point, Point)>,
    pub witness_index: Option<(usize, usize)>,
    pub n_pairs: usize,
    pub tolerance: f64,
    pub pass: bool,
    /// Deviations restricted to the own `alpha` slice.
    pub per_slice: bool,
    /// True when no grid-free certificate backs the mechanism.
    pub grid_certified_only: bool,
}

/// Largest gain from misreporting over ordered node pairs; parallel over
/// source nodes, ties resolved to the lowest row-major index.
pub fn check_ic(mech: &Mechanism, utility: &UtilitySpec, grid: &Grid, eps: f64) -> IcReport {
    let bundles = mech.bundles_on(grid);
    let per_slice = mech.observable_alpha();
    let n = grid.len();
    let (gain, i, j) = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = grid.node(i);
            let own = utility.eval(t, &bundles[i]);
            let targets = if per_slice {
                let start = (i / grid.n_beta) * grid.n_beta;
                start..start + grid.n_beta
            } else {
                0..n
            };
            let mut best = (0.0, i, i);
            for j in targets {
                let g = utility.eval(t, &bundles[j]) - own;
                if g > best.0 {
                    best = (g, i, j);
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0, 0), |acc, b| if b.0 > acc.0 { b } else { acc });
    let positive = gain > 0.0;
    IcReport {
        max_gain: gain,
        witness: positive.then(|| (grid.node(i), grid.node(j))),
        witness_index: positive.then_some((i, j)),
        n_pairs: if per_slice {
            grid.n_alpha * grid.n_beta * grid.n_beta
        } else {
            n * n
        },
        tolerance: eps,
        pass: gain <= eps,
        per_slice,
        grid_certified_only: !mech.is_closed_form(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrReport {
    pub min_utility: f64,
    pub witness: Point,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn check_ir(mech: &Mechanism, utility: &UtilitySpec, grid: &Grid, tol: f64) -> IrReport {
    let bundles = mech.bundles_on(grid);
    let mut min = f64::INFINITY;
    let mut at = 0;
    for (i, b) in bundles.iter().enumerate() {
        let u = utility.eval(grid.node(i), b);
        if u < min {
            min = u;
            at = i;
        }
    }
    IrReport {
        min_utility: min,
        witness: grid.node(at),
        tolerance: tol,
        pass: min >= -tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquityReport {
    /// Largest allocation difference between types compared as equal-merit.
    pub max_spread: f64,
    pub bins: usize,
    /// Spread taken over exact iso-merit sets rather than merit bins.
    pub exact: bool,
    pub witness: Option<(Point, Point)>,
}

impl EquityReport {
    pub fn pass(&self, tol: f64) -> bool {
        self.max_spread <= tol
    }
}

struct Spread {
    value: f64,
    witness: Option<(Point, Point)>,
}

impl Spread {
    fn new() -> Self {
        Spread {
            value: 0.0,
            witness: None,
        }
    }

    fn absorb(&mut self, group: &[(Point, f64)]) {
        let Some(lo) = group.iter().min_by(|a, b| a.1.total_cmp(&b.1)) else {
            return;
        };
        let hi = group.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        if hi.1 - lo.1 > self.value {
            self.value = hi.1 - lo.1;
            self.witness = Some((lo.0, hi.0));
        }
    }
}

/// Equity spread. Closed-form merit-measurable mechanisms are compared along
/// traced iso-merit curves, one per bin; sampled mechanisms declared
/// merit-measurable are compared across nodes of equal merit; anything else
/// falls back to the within-bin spread over grid nodes.
pub fn check_equity(
    mech: &Mechanism,
    merit: &Merit,
    grid: &Grid,
    n_bins: usize,
) -> Result<EquityReport> {
    if n_bins == 0 {
        return Err(Error::InvalidArgument(
            "equity check needs at least one bin".into(),
        ));
    }
    let (lo, hi) = merit.range(&grid.space);
    let width = (hi - lo) / n_bins as f64;
    let mut spread = Spread::new();
    let exact = mech.merit_measurable();
    if exact && mech.is_closed_form() {
        let field = LevelField::Merit(*merit);
        let groups: Vec<Vec<(Point, f64)>> = (0..n_bins)
            .into_par_iter()
            .map(|j| {
                let level = lo + (j as f64 + LEVEL_OFFSET) * width;
                match trace(&field, level, &grid.space) {
                    Ok(c) => c
                        .resample(&field, EQUITY_CONTOUR_SAMPLES)
                        .into_iter()
                        .map(|p| (p, mech.allocation(p)))
                        .collect(),
                    Err(_) => Vec::new(),
                }
            })
            .collect();
        groups.iter().for_each(|g| spread.absorb(g));
    } else {
        let mut nodes: Vec<(f64, Point, f64)> = grid
            .nodes()
            .into_iter()
            .map(|p| (merit.eval(p.alpha, p.beta), p, mech.allocation(p)))
            .collect();
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let same = |a: f64, b: f64| {
            if exact {
                (a - b).abs() <= 1e-12 * (1.0 + a.abs())
            } else {
                bin_of(a, lo, width, n_bins) == bin_of(b, lo, width, n_bins)
            }
        };
        let mut start = 0;
        for k in 1..=nodes.len() {
            if k == nodes.len() || !same(nodes[start].0, nodes[k].0) {
                let group: Vec<(Point, f64)> = nodes[start..k].iter().map(|n| (n.1, n.2)).collect();
                spread.absorb(&group);
                start = k;
            }
        }
    }
    Ok(EquityReport {
        max_spread: spread.value,
        bins: n_bins,
        exact,
        witness: spread.witness,
    })
}

fn bin_of(eta: f64, lo: f64, width: f64, n: usize) -> usize {
    (((eta - lo) / width).floor().max(0.0) as usize).min(n - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    /// Largest drop of the allocation below an earlier (lower-merit) node.
    pub max_decrease: f64,
    /// `(higher allocation at lower merit, lower allocation at higher merit)`
    pub witness: Option<(Point, Point)>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Sorts nodes by merit and checks the allocation never decreases. The
/// mechanism must first pass the equity check.
pub fn check_merit_monotone(
    mech: &Mechanism,
    merit: &Merit,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<MonotoneReport> {
    let eq = check_equity(mech, merit, grid, tol.equity_bins)?;
    if !eq.pass(tol.equity) {
        return Err(Error::NotEquitable {
            spread: eq.max_spread,
            tolerance: tol.equity,
        });
    }
    let mut nodes: Vec<(f64, Point, f64)> = grid
        .nodes()
        .into_iter()
        .map(|p| (merit.eval(p.alpha, p.beta), p, mech.allocation(p)))
        .collect();
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut peak = (f64::NEG_INFINITY, Point::new(f64::NAN, f64::NAN));
    let mut worst = 0.0;
    let mut witness = None;
    for &(_, p, x) in &nodes {
        if peak.0 - x > worst {
            worst = peak.0 - x;
            witness = Some((peak.1, p));
        }
        if x > peak.0 {
            peak = (x, p);
        }
    }
    Ok(MonotoneReport {
        max_decrease: worst,
        witness,
        tolerance: tol.monotone,
        pass: worst <= tol.monotone,
    })
}
