use super::mixture::IncreasingAllocation;
use crate::error::Result;
use crate::model::{Bundle, Instrument, LinearUtility, Merit, Point, TypeSpace};
use crate::numeric::gauss_legendre5;
use crate::reparam::level_beta;
use serde::Serialize;

/// Observable-`alpha` mechanism: each `alpha` slice is a one-dimensional
/// screening menu in `beta` with envelope transfers and zero rent at `beta_lo`.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionalMechanism {
    pub utility: LinearUtility,
    pub merit: Merit,
    pub space: TypeSpace,
    pub xhat: IncreasingAllocation,
    pub instrument: Instrument,
}

impl ConditionalMechanism {
    pub fn allocation(&self, t: Point) -> f64 {
        self.xhat.eval(self.merit.eval(t.alpha, t.beta))
    }

    /// `int_{beta_lo}^{beta} xhat(eta(alpha, s)) ds`, split at the knots of `xhat`.
    pub fn rent(&self, t: Point) -> f64 {
        let lo = self.space.beta_lo;
        if t.beta <= lo {
            return 0.0;
        }
        let mut cuts: Vec<f64> = self
            .xhat
            .breakpoints()
            .into_iter()
            .filter_map(|e| level_beta(&self.merit, t.alpha, e).ok())
            .filter(|&s| s > lo && s < t.beta)
            .collect();
        cuts.sort_by(|a, b| a.total_cmp(b));
        let mut edges = vec![lo];
        edges.extend(cuts);
        edges.push(t.beta);
        let f = |s: f64| self.xhat.eval(self.merit.eval(t.alpha, s));
        edges
            .windows(2)
            .map(|w| gauss_legendre5(f, w[0], w[1]))
            .sum()
    }

    /// Transfer `beta x - rent` in utility units.
    pub fn transfer(&self, t: Point) -> f64 {
        t.beta * self.allocation(t) - self.rent(t)
    }

    pub fn bundle(&self, t: Point) -> Bundle {
        let x = self.allocation(t);
        let tr = t.beta * x - self.rent(t);
        match self.instrument {
            Instrument::Payments => Bundle::new(x, tr / self.utility.w.value(t.alpha), 0.0),
            Instrument::Ordeals => Bundle::new(x, 0.0, tr / self.utility.z.value(t.alpha)),
        }
    }
}

pub fn build_conditional(
    u: &LinearUtility,
    merit: &Merit,
    space: &TypeSpace,
    xhat: &IncreasingAllocation,
    instrument: Instrument,
) -> Result<ConditionalMechanism> {
    Ok(ConditionalMechanism {
        utility: *u,
        merit: *merit,
        space: *space,
        xhat: xhat.clone(),
        instrument,
    })
}
