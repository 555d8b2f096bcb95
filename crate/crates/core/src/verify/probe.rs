use crate::contour::{trace, LevelField};
use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram};
use crate::model::{Grid, Instrument, Merit, Point, UtilitySpec};
use serde::Serialize;

/// Largest grid the exhaustive probe accepts per side.
pub const PROBE_MAX_SIDE: usize = 12;
pub const PROBE_FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    /// One menu item per merit bin; equity holds by construction.
    MeritClasses,
    /// One menu item per grid node: the equity coupling is dropped.
    PerNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeOptions {
    pub n_levels: usize,
    /// Points traced on each boundary between adjacent merit bins.
    pub edge_points: usize,
    pub mode: ProbeMode,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            n_levels: 5,
            edge_points: 16,
            mode: ProbeMode::MeritClasses,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeItem {
    pub x: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    /// `max_m x_m - min_m x_m` over feasible menus.
    pub max_equitable_spread: f64,
    pub instrument: Instrument,
    pub mode: ProbeMode,
    pub classes: usize,
    /// Menu at the optimum, one item per non-empty class.
    pub certificate: Vec<ProbeItem>,
    /// `(a, b)` maximising `x_a - x_b`.
    pub pair: (usize, usize),
    pub n_constraints: usize,
    pub lp_solves: usize,
    /// Smallest slack of the certificate over all generated constraints.
    pub min_slack: f64,
    pub sound: bool,
}

/// A type and the classes whose item it must weakly prefer to every other.
struct Member {
    t: Point,
    classes: Vec<usize>,
}

fn members(merit: &Merit, grid: &Grid, opts: &ProbeOptions) -> Result<(usize, Vec<Member>)> {
    if opts.mode == ProbeMode::PerNode {
        let m = grid
            .nodes()
            .into_iter()
            .enumerate()
            .map(|(i, t)| Member {
                t,
                classes: vec![i],
            })
            .collect();
        return Ok((grid.len(), m));
    }
    let n = opts.n_levels;
    let (lo, hi) = merit.range(&grid.space);
    let width = (hi - lo) / n as f64;
    let mut out: Vec<Member> = grid
        .nodes()
        .into_iter()
        .map(|t| {
            let k = (((merit.eval(t.alpha, t.beta) - lo) / width)
                .floor()
                .max(0.0) as usize)
                .min(n - 1);
            Member {
                t,
                classes: vec![k],
            }
        })
        .collect();
    // a type on a bin boundary is indifferent between the two adjacent items
    let field = LevelField::Merit(*merit);
    for k in 1..n {
        let c = trace(&field, lo + k as f64 * width, &grid.space)?;
        out.extend(
            c.resample(&field, opts.edge_points)
                .into_iter()
                .map(|t| Member {
                    t,
                    classes: vec![k - 1, k],
                }),
        );
    }
    // drop empty classes and renumber
    let mut used = vec![false; n];
    out.iter()
        .flat_map(|m| &m.classes)
        .for_each(|&c| used[c] = true);
    let mut map = vec![usize::MAX; n];
    let mut next = 0;
    for (c, u) in used.iter().enumerate() {
        if *u {
            map[c] = next;
            next += 1;
        }
    }
    for m in &mut out {
        m.classes.iter_mut().for_each(|c| *c = map[*c]);
    }
    Ok((next, out))
}

/// Maximal allocation spread of a single-instrument menu with one item per
/// merit class, subject to IC and IR at every grid node and every traced bin
/// boundary point. Solved as one LP per ordered pair of classes.
pub fn probe_single_instrument(
    spec: &UtilitySpec,
    merit: &Merit,
    grid: &Grid,
    instrument: Instrument,
    opts: &ProbeOptions,
) -> Result<ProbeResult> {
    let u = spec.linear()?;
    if grid.n_alpha > PROBE_MAX_SIDE || grid.n_beta > PROBE_MAX_SIDE {
        return Err(Error::InvalidArgument(format!(
            "probe grid {}x{} exceeds {PROBE_MAX_SIDE}x{PROBE_MAX_SIDE}",
            grid.n_alpha, grid.n_beta
        )));
    }
    if opts.mode == ProbeMode::MeritClasses && opts.n_levels == 0 {
        return Err(Error::InvalidArgument(
            "probe needs at least one merit class".into(),
        ));
    }
    let cost = |t: Point| match instrument {
        Instrument::Payments => u.w.value(t.alpha),
        Instrument::Ordeals => u.z.value(t.alpha),
    };
    let (nc, mems) = members(merit, grid, opts)?;
    let t_bounds = match instrument {
        Instrument::Payments => (f64::NEG_INFINITY, f64::INFINITY),
        Instrument::Ordeals => (0.0, f64::INFINITY),
    };
    let mut lp = LinearProgram::new((0..nc).flat_map(|_| [(0.0, 1.0), t_bounds]).collect());
    for m in &mems {
        let (b, c) = (m.t.beta, cost(m.t));
        for &own in &m.classes {
            lp.push(vec![(2 * own, b), (2 * own + 1, -c)], Cmp::Ge, 0.0);
            for other in (0..nc).filter(|&o| o != own) {
                lp.push(
                    vec![
                        (2 * own, b),
                        (2 * own + 1, -c),
                        (2 * other, -b),
                        (2 * other + 1, c),
                    ],
                    Cmp::Ge,
                    0.0,
                );
            }
        }
    }

    // classes whose members value the good most relative to the instrument
    // first, so a fully separating pair is usually tried early
    let mut ratio = vec![(0.0, 0usize); nc];
    for m in &mems {
        for &c in &m.classes {
            ratio[c].0 += m.t.beta / cost(m.t);
            ratio[c].1 += 1;
        }
    }
    let score: Vec<f64> = ratio.iter().map(|(s, k)| s / *k as f64).collect();
    let mut pairs: Vec<(usize, usize)> = (0..nc)
        .flat_map(|a| (0..nc).map(move |b| (a, b)))
        .filter(|(a, b)| a != b)
        .collect();
    pairs.sort_by(|p, q| (score[q.0] - score[q.1]).total_cmp(&(score[p.0] - score[p.1])));

    let mut best: Option<(f64, (usize, usize), Vec<f64>)> = None;
    let mut solves = 0;
    for (a, b) in pairs {
        lp.objective.iter_mut().for_each(|c| *c = 0.0);
        lp.objective[2 * a] = 1.0;
        lp.objective[2 * b] = -1.0;
        let sol = lp.maximize()?;
        solves += 1;
        if best.as_ref().is_none_or(|(v, _, _)| sol.objective > *v) {
            best = Some((sol.objective, (a, b), sol.values));
        }
        if best.as_ref().unwrap().0 >= 1.0 - 1e-12 {
            break;
        }
    }
    let (spread, pair, values) = match best {
        Some(b) => b,
        // a single class: the menu is constant
        None => (0.0, (0, 0), vec![0.0; 2 * nc]),
    };
    let min_slack = lp.min_slack(&values);
    Ok(ProbeResult {
        max_equitable_spread: spread.max(0.0),
        instrument,
        mode: opts.mode,
        classes: nc,
        certificate: values
            .chunks(2)
            .map(|c| ProbeItem { x: c[0], t: c[1] })
            .collect(),
        pair,
        n_constraints: lp.rows.len(),
        lp_solves: solves,
        min_slack,
        sound: min_slack >= -PROBE_FEASIBILITY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_grid, LinearUtility, TypeSpace, Weight};

    fn spec() -> UtilitySpec {
        UtilitySpec::Linear(LinearUtility::new(
            Weight::Exponential { a: 1.0, b: 1.0 },
            Weight::Exponential { a: 1.0, b: -1.0 },
        ))
    }

    fn grid(n: usize) -> Grid {
        make_grid(TypeSpace::new(0.0, 1.0, 1.0, 2.0).unwrap(), n, n).unwrap()
    }

    #[test]
    fn payments_cannot_screen_equitably() {
        let r = probe_single_instrument(
            &spec(),
            &Merit::WeightedSum { a: 1.0, b: 1.0 },
            &grid(6),
            Instrument::Payments,
            &ProbeOptions::default(),
        )
        .unwrap();
        assert!(r.max_equitable_spread <= 1e-6, "{r:?}");
        assert!(r.sound && r.classes == 5);
    }

    #[test]
    fn dropping_equity_lets_payments_screen() {
        let opts = ProbeOptions {
            mode: ProbeMode::PerNode,
            ..ProbeOptions::default()
        };
        let r = probe_single_instrument(
            &spec(),
            &Merit::WeightedSum { a: 1.0, b: 1.0 },
            &grid(6),
            Instrument::Payments,
            &opts,
        )
        .unwrap();
        assert!(r.max_equitable_spread >= 0.5);
        assert!(r.sound);
    }

    #[test]
    fn ordeals_depend_on_alignment() {
        let p = ProbeOptions::default();
        let r = probe_single_instrument(
            &spec(),
            &Merit::WeightedSum { a: 1.0, b: 1.0 },
            &grid(6),
            Instrument::Ordeals,
            &p,
        )
        .unwrap();
        assert!(r.max_equitable_spread <= 1e-6, "{r:?}");
        let r = probe_single_instrument(
            &spec(),
            &Merit::Product { c: 1.0 },
            &grid(6),
            Instrument::Ordeals,
            &p,
        )
        .unwrap();
        assert!(r.max_equitable_spread >= 0.99, "{r:?}");
        assert!(r.sound);
    }

    #[test]
    fn large_grid_rejected() {
        let e = probe_single_instrument(
            &spec(),
            &Merit::WeightedSum { a: 1.0, b: 1.0 },
            &grid(13),
            Instrument::Payments,
            &ProbeOptions::default(),
        );
        assert!(matches!(e, Err(Error::InvalidArgument(_))));
    }
}
