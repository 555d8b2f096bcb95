use crate::construct::ThresholdMechanism;
use crate::error::Result;
use crate::reparam::ReparamRectangle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

type Kl = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub trials: usize,
    pub seed: u64,
    /// `min (V(a) + V(b))/2 - V((a + b)/2)`
    pub midpoint_min_defect: f64,
    pub midpoint_witness: Option<(Kl, Kl)>,
    /// `min V(b) - V(a) - g(a).(b - a)`
    pub subgradient_min_defect: f64,
    pub subgradient_witness: Option<(Kl, Kl)>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Random midpoint and subgradient trials on the mechanism's reparametrised rectangle.
pub fn check_convexity(
    th: &ThresholdMechanism,
    n_trials: usize,
    seed: u64,
    tol: f64,
) -> Result<ConvexityReport> {
    check_convexity_in(th, &th.rect, n_trials, seed, tol)
}

pub fn check_convexity_in(
    th: &ThresholdMechanism,
    region: &ReparamRectangle,
    n_trials: usize,
    seed: u64,
    tol: f64,
) -> Result<ConvexityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Kl {
        (
            rng.gen_range(region.kappa_lo..=region.kappa_hi),
            rng.gen_range(region.lambda_lo..=region.lambda_hi),
        )
    };
    let mut mid = (f64::INFINITY, None);
    let mut sub = (f64::INFINITY, None);
    for _ in 0..n_trials {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let va = th.v(a.0, a.1)?;
        let vb = th.v(b.0, b.1)?;
        let vm = th.v(0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1))?;
        let d = 0.5 * (va + vb) - vm;
        if d < mid.0 {
            mid = (d, Some((a, b)));
        }
        let (gx, gq) = th.subgradient(a.0, a.1)?;
        let d = vb - va - gx * (b.0 - a.0) - gq * (b.1 - a.1);
        if d < sub.0 {
            sub = (d, Some((a, b)));
        }
    }
    let (mid_d, sub_d) = if n_trials == 0 {
        (0.0, 0.0)
    } else {
        (mid.0, sub.0)
    };
    Ok(ConvexityReport {
        trials: n_trials,
        seed,
        midpoint_min_defect: mid_d,
        midpoint_witness: mid.1,
        subgradient_min_defect: sub_d,
        subgradient_witness: sub.1,
        tolerance: tol,
        pass: mid_d >= -tol && sub_d >= -tol,
    })
}
