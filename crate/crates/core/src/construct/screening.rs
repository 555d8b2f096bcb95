use super::mixture::IncreasingAllocation;
use crate::error::Result;
use crate::model::{Bundle, LinearUtility, Point, TypeSpace};
use crate::numeric::gauss_legendre5;
use crate::reparam::{bounding_rectangle, to_kl};
use serde::Serialize;

/// Payment-only screening on `kappa = beta / w(alpha)`: allocation `phi(kappa)`
/// with envelope payments, so indirect utility is `w * int phi`.
///
/// It ignores merit and serves as the reference for what payments alone can do.
#[derive(Debug, Clone, Serialize)]
pub struct PaymentScreening {
    pub utility: LinearUtility,
    /// Allocation as a function of `kappa` (knots are kappa values).
    pub phi: IncreasingAllocation,
    pub kappa_lo: f64,
}

impl PaymentScreening {
    pub fn allocation(&self, t: Point) -> f64 {
        self.phi.eval(to_kl(&self.utility, t).0)
    }

    pub fn bundle(&self, t: Point) -> Bundle {
        let k = to_kl(&self.utility, t).0;
        let x = self.phi.eval(k);
        let mut edges = vec![self.kappa_lo];
        edges.extend(
            self.phi
                .breakpoints()
                .into_iter()
                .filter(|&e| e > self.kappa_lo && e < k),
        );
        edges.push(k.max(self.kappa_lo));
        let rent: f64 = edges
            .windows(2)
            .map(|w| gauss_legendre5(|s| self.phi.eval(s), w[0], w[1]))
            .sum();
        Bundle::new(x, k * x - rent, 0.0)
    }
}

pub fn build_payment_screening(
    u: &LinearUtility,
    space: &TypeSpace,
    phi: &IncreasingAllocation,
) -> Result<PaymentScreening> {
    Ok(PaymentScreening {
        utility: *u,
        phi: phi.clone(),
        kappa_lo: bounding_rectangle(u, space).kappa_lo,
    })
}
