use super::threshold::{certified_unchecked, ThresholdMechanism};
use crate::error::{Error, Result};
use crate::model::{Bundle, LinearUtility, Merit, Point, Side, TypeSpace, XhatSpec};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Piecewise linear between knots, flat outside them.
    Linear,
    /// Right-continuous steps; zero before the first knot.
    Step,
}

/// Weakly increasing map from merit into `[0, 1]`, given by knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncreasingAllocation {
    pub knots: Vec<(f64, f64)>,
    pub interpolation: Interpolation,
}

impl IncreasingAllocation {
    pub fn new(knots: Vec<(f64, f64)>, interpolation: Interpolation) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidArgument(
                "allocation table has no knots".into(),
            ));
        }
        for (i, &(eta, x)) in knots.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) || !eta.is_finite() {
                return Err(Error::AllocationRange { index: i, value: x });
            }
            if i > 0 {
                let (pe, px) = knots[i - 1];
                if !(eta > pe) {
                    return Err(Error::InvalidArgument(format!(
                        "knot {i}: merit values must strictly increase"
                    )));
                }
                if x < px {
                    return Err(Error::NotMonotone { index: i });
                }
            }
        }
        Ok(IncreasingAllocation {
            knots,
            interpolation,
        })
    }

    /// Resolves a scenario description against the merit range.
    pub fn from_spec(spec: &XhatSpec, range: (f64, f64)) -> Result<Self> {
        let (lo, hi) = range;
        match spec {
            XhatSpec::Ramp => Self::new(vec![(lo, 0.0), (hi, 1.0)], Interpolation::Linear),
            XhatSpec::Step { eta0 } => Self::new(vec![(*eta0, 1.0)], Interpolation::Step),
            XhatSpec::Constant { c } => Self::new(vec![(lo, *c), (hi, *c)], Interpolation::Linear),
            XhatSpec::LinearTable { knots } => Self::new(knots.clone(), Interpolation::Linear),
            XhatSpec::StepTable { knots } => Self::new(knots.clone(), Interpolation::Step),
        }
    }

    pub fn eval(&self, eta: f64) -> f64 {
        let k = &self.knots;
        match self.interpolation {
            Interpolation::Linear => {
                let i = k.partition_point(|&(e, _)| e <= eta);
                if i == 0 {
                    k[0].1
                } else if i == k.len() {
                    k[k.len() - 1].1
                } else {
                    let (e0, x0) = k[i - 1];
                    let (e1, x1) = k[i];
                    x0 + (x1 - x0) * (eta - e0) / (e1 - e0)
                }
            }
            Interpolation::Step => match k.partition_point(|&(e, _)| e <= eta) {
                0 => 0.0,
                i => k[i - 1].1,
            },
        }
    }

    /// `x(eta+)`; both interpolations are right-continuous.
    pub fn right_limit(&self, eta: f64) -> f64 {
        self.eval(eta)
    }

    /// Merit values where the allocation jumps.
    pub fn jumps(&self) -> Vec<f64> {
        match self.interpolation {
            Interpolation::Linear => Vec::new(),
            Interpolation::Step => {
                let mut prev = 0.0;
                let mut out = Vec::new();
                for &(e, x) in &self.knots {
                    if x > prev {
                        out.push(e);
                    }
                    prev = x;
                }
                out
            }
        }
    }

    /// Every knot merit value (kinks and jumps).
    pub fn breakpoints(&self) -> Vec<f64> {
        self.knots.iter().map(|k| k.0).collect()
    }
}

/// One threshold component `weight * 1{eta >= eta_star}` of a step decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Component {
    pub weight: f64,
    pub eta_star: f64,
    pub side: Side,
}

/// Splits `xhat` into threshold rules at `n` uniform merit quantiles plus
/// its jump points. The sum of components is a right-continuous step function
/// below `xhat`, off by at most the largest rise of `xhat` over one cell.
pub fn decompose_increasing(
    xhat: &IncreasingAllocation,
    range: (f64, f64),
    n: usize,
) -> Result<Vec<Component>> {
    if n == 0 {
        return Err(Error::InvalidArgument("decomposition needs N >= 1".into()));
    }
    let (lo, hi) = range;
    let mut thresholds: Vec<f64> = (1..=n)
        .map(|i| {
            if i == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / n as f64
            }
        })
        .collect();
    thresholds.extend(xhat.jumps().into_iter().filter(|&e| e > lo && e <= hi));
    thresholds.sort_by(|a, b| a.total_cmp(b));
    thresholds.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));

    let mut out = Vec::new();
    let base = xhat.right_limit(lo);
    if base > 0.0 {
        out.push(Component {
            weight: base,
            eta_star: lo,
            side: Side::High,
        });
    }
    let mut prev = base;
    for eta in thresholds {
        let cur = xhat.right_limit(eta);
        if cur - prev > 0.0 {
            out.push(Component {
                weight: cur - prev,
                eta_star: eta,
                side: Side::High,
            });
        }
        prev = cur;
    }
    Ok(out)
}

/// Largest continuous rise of `xhat` inside one decomposition cell: a bound
/// on `sup |reconstruction - xhat|` over the merit range.
pub fn reconstruction_bound(xhat: &IncreasingAllocation, range: (f64, f64), n: usize) -> f64 {
    let (lo, hi) = range;
    let mut cuts: Vec<f64> = (0..=n.max(1))
        .map(|i| lo + (hi - lo) * i as f64 / n.max(1) as f64)
        .collect();
    cuts.extend(xhat.jumps().into_iter().filter(|&e| e > lo && e < hi));
    cuts.sort_by(|a, b| a.total_cmp(b));
    let delta = 1e-9 * (hi - lo);
    cuts.windows(2)
        .filter(|w| w[1] - w[0] > 2.0 * delta)
        .map(|w| xhat.eval(w[1] - delta) - xhat.eval(w[0]))
        .fold(0.0, f64::max)
}

/// Value of the step reconstruction at merit `eta`.
pub fn reconstruct(components: &[Component], eta: f64) -> f64 {
    components
        .iter()
        .filter(|c| eta > c.eta_star || (eta == c.eta_star && c.side == Side::High))
        .map(|c| c.weight)
        .sum()
}

/// Weighted average of threshold mechanisms; the residual weight holds the zero bundle.
#[derive(Debug, Clone, Serialize)]
pub struct MixtureMechanism {
    pub components: Vec<(f64, ThresholdMechanism)>,
    pub xhat: IncreasingAllocation,
    pub n: usize,
}

impl MixtureMechanism {
    pub fn allocation(&self, t: Point) -> f64 {
        self.components
            .iter()
            .map(|(w, c)| w * c.allocation(t))
            .sum()
    }

    pub fn bundle(&self, t: Point) -> Bundle {
        let mut b = Bundle::ZERO;
        for (w, c) in &self.components {
            let cb = c.bundle(t);
            b.x += w * cb.x;
            b.p += w * cb.p;
            b.q += w * cb.q;
        }
        b
    }

    pub fn weights(&self) -> Vec<(f64, f64)> {
        self.components
            .iter()
            .map(|(w, c)| (*w, c.eta_star))
            .collect()
    }
}

pub fn build_mixture(
    u: &LinearUtility,
    merit: &Merit,
    space: &TypeSpace,
    xhat: &IncreasingAllocation,
    n: usize,
    margin: f64,
) -> Result<MixtureMechanism> {
    let parts = decompose_increasing(xhat, merit.range(space), n)?;
    let components = parts
        .par_iter()
        .map(|c| {
            certified_unchecked(u, merit, space, c.eta_star, c.side, margin).map(|m| (c.weight, m))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixtureMechanism {
        components,
        xhat: xhat.clone(),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;

    fn ramp() -> IncreasingAllocation {
        IncreasingAllocation::from_spec(&XhatSpec::Ramp, (1.0, 3.0)).unwrap()
    }

    #[test]
    fn constant_is_single_base_component() {
        let c =
            IncreasingAllocation::from_spec(&XhatSpec::Constant { c: 0.4 }, (1.0, 3.0)).unwrap();
        let d = decompose_increasing(&c, (1.0, 3.0), 10).unwrap();
        assert_eq!(
            d,
            vec![Component {
                weight: 0.4,
                eta_star: 1.0,
                side: Side::High
            }]
        );
    }

    #[test]
    fn step_is_single_component() {
        let s = IncreasingAllocation::from_spec(&XhatSpec::Step { eta0: 2.0 }, (1.0, 3.0)).unwrap();
        let d = decompose_increasing(&s, (1.0, 3.0), 1).unwrap();
        assert_eq!(
            d,
            vec![Component {
                weight: 1.0,
                eta_star: 2.0,
                side: Side::High
            }]
        );
        let d7 = decompose_increasing(&s, (1.0, 3.0), 7).unwrap();
        assert_eq!(d7.len(), 1);
    }

    #[test]
    fn ramp_quarters() {
        let d = decompose_increasing(&ramp(), (1.0, 3.0), 4).unwrap();
        let etas: Vec<f64> = d.iter().map(|c| c.eta_star).collect();
        assert_eq!(etas, vec![1.5, 2.0, 2.5, 3.0]);
        for c in &d {
            assert!((c.weight - 0.25).abs() < 1e-15);
        }
        // direct sup-norm scan
        let err = linspace(1.0, 3.0, 20001)
            .into_iter()
            .map(|e| (reconstruct(&d, e) - ramp().eval(e)).abs())
            .fold(0.0, f64::max);
        assert!(err <= 0.25 + 1e-12, "{err}");
        let b = reconstruction_bound(&ramp(), (1.0, 3.0), 4);
        assert!(err <= b + 1e-9 && b <= 0.25);
    }

    #[test]
    fn table_validation() {
        let bad = IncreasingAllocation::new(vec![(1.0, 0.5), (2.0, 0.2)], Interpolation::Linear);
        assert_eq!(bad, Err(Error::NotMonotone { index: 1 }));
        let out = IncreasingAllocation::new(vec![(1.0, 1.5)], Interpolation::Step);
        assert_eq!(
            out,
            Err(Error::AllocationRange {
                index: 0,
                value: 1.5
            })
        );
    }

    #[test]
    fn step_table_eval() {
        let s =
            IncreasingAllocation::new(vec![(1.5, 0.2), (2.5, 0.7)], Interpolation::Step).unwrap();
        assert_eq!(s.eval(1.0), 0.0);
        assert_eq!(s.eval(1.5), 0.2);
        assert_eq!(s.eval(2.49), 0.2);
        assert_eq!(s.eval(2.5), 0.7);
        assert_eq!(s.jumps(), vec![1.5, 2.5]);
    }
}
