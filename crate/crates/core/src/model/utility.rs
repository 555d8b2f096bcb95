use super::{Bundle, Point, Weight};
use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt;

/// `U = beta*x - w(alpha)*p - z(alpha)*q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearUtility {
    pub w: Weight,
    pub z: Weight,
}

impl LinearUtility {
    pub fn new(w: Weight, z: Weight) -> Self {
        LinearUtility { w, z }
    }

    pub fn eval(&self, t: Point, b: &Bundle) -> f64 {
        t.beta * b.x - self.w.value(t.alpha) * b.p - self.z.value(t.alpha) * b.q
    }

    /// The same preferences written in the separable nonlinear form.
    pub fn as_nonlinear(&self, q_bar: f64) -> NonlinearUtility {
        NonlinearUtility {
            v: GoodValue::Linear,
            w: self.w,
            z: self.z,
            ordeal_cost: OrdealCost::Linear,
            q_bar,
        }
    }
}

/// Value of the good `v(beta, x)`, zero at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family")]
pub enum GoodValue {
    /// `beta * x`
    Linear,
    /// `beta * ln(1 + gamma x) / gamma`
    Log { gamma: f64 },
    /// `ln(1 + beta x)`
    LogProduct,
}

impl GoodValue {
    pub fn v(&self, beta: f64, x: f64) -> f64 {
        match *self {
            GoodValue::Linear => beta * x,
            GoodValue::Log { gamma } => beta * (gamma * x).ln_1p() / gamma,
            GoodValue::LogProduct => (beta * x).ln_1p(),
        }
    }

    pub fn v_x(&self, beta: f64, x: f64) -> f64 {
        match *self {
            GoodValue::Linear => beta,
            GoodValue::Log { gamma } => beta / (1.0 + gamma * x),
            GoodValue::LogProduct => beta / (1.0 + beta * x),
        }
    }

    pub fn v_beta(&self, beta: f64, x: f64) -> f64 {
        match *self {
            GoodValue::Linear => x,
            GoodValue::Log { gamma } => (gamma * x).ln_1p() / gamma,
            GoodValue::LogProduct => x / (1.0 + beta * x),
        }
    }

    pub fn v_beta_x(&self, beta: f64, x: f64) -> f64 {
        match *self {
            GoodValue::Linear => 1.0,
            GoodValue::Log { gamma } => 1.0 / (1.0 + gamma * x),
            GoodValue::LogProduct => {
                let d = 1.0 + beta * x;
                1.0 / (d * d)
            }
        }
    }
}

impl fmt::Display for GoodValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GoodValue::Linear => write!(f, "linear"),
            GoodValue::Log { gamma } => write!(f, "log({gamma:?})"),
            GoodValue::LogProduct => write!(f, "log_product"),
        }
    }
}

/// Shape `h(q)` of the ordeal cost `z(alpha, q) = z(alpha) * h(q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family")]
pub enum OrdealCost {
    Linear,
    /// `q + c q^2 / 2`
    Quadratic {
        c: f64,
    },
}

impl OrdealCost {
    pub fn h(&self, q: f64) -> f64 {
        match *self {
            OrdealCost::Linear => q,
            OrdealCost::Quadratic { c } => q + 0.5 * c * q * q,
        }
    }

    pub fn dh(&self, q: f64) -> f64 {
        match *self {
            OrdealCost::Linear => 1.0,
            OrdealCost::Quadratic { c } => 1.0 + c * q,
        }
    }

    /// Inverse of `h` on `q >= 0`.
    pub fn inverse(&self, cost: f64) -> f64 {
        match *self {
            OrdealCost::Linear => cost,
            OrdealCost::Quadratic { c } if c > 0.0 => ((1.0 + 2.0 * c * cost).sqrt() - 1.0) / c,
            OrdealCost::Quadratic { .. } => cost,
        }
    }
}

impl fmt::Display for OrdealCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            OrdealCost::Linear => write!(f, "linear"),
            OrdealCost::Quadratic { c } => write!(f, "quadratic({c:?})"),
        }
    }
}

/// `U = v(beta, x) - w(alpha) p - z(alpha) h(q)` with ordeals capped at `q_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlinearUtility {
    pub v: GoodValue,
    pub w: Weight,
    pub z: Weight,
    pub ordeal_cost: OrdealCost,
    pub q_bar: f64,
}

impl NonlinearUtility {
    pub fn eval(&self, t: Point, b: &Bundle) -> f64 {
        self.v.v(t.beta, b.x) - self.money(t.alpha, b.p) - self.ordeal(t.alpha, b.q)
    }

    pub fn money(&self, alpha: f64, p: f64) -> f64 {
        self.w.value(alpha) * p
    }

    pub fn ordeal(&self, alpha: f64, q: f64) -> f64 {
        self.z.value(alpha) * self.ordeal_cost.h(q)
    }

    pub fn money_p(&self, alpha: f64) -> f64 {
        self.w.value(alpha)
    }

    pub fn money_alpha_p(&self, alpha: f64) -> f64 {
        self.w.d1(alpha)
    }

    pub fn ordeal_q(&self, alpha: f64, q: f64) -> f64 {
        self.z.value(alpha) * self.ordeal_cost.dh(q)
    }

    pub fn ordeal_alpha(&self, alpha: f64, q: f64) -> f64 {
        self.z.d1(alpha) * self.ordeal_cost.h(q)
    }

    pub fn ordeal_alpha_q(&self, alpha: f64, q: f64) -> f64 {
        self.z.d1(alpha) * self.ordeal_cost.dh(q)
    }

    pub fn check(&self, alpha_lo: f64, alpha_hi: f64) -> Result<()> {
        self.w.check(alpha_lo, alpha_hi)?;
        self.z.check(alpha_lo, alpha_hi)?;
        if let GoodValue::Log { gamma } = self.v {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::MalformedScenario(format!(
                    "log({gamma}): need gamma > 0"
                )));
            }
        }
        if let OrdealCost::Quadratic { c } = self.ordeal_cost {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::MalformedScenario(format!(
                    "quadratic({c}): need c >= 0"
                )));
            }
        }
        if !(self.q_bar > 0.0) {
            return Err(Error::MalformedScenario(format!(
                "q_bar = {}: need q_bar > 0",
                self.q_bar
            )));
        }
        Ok(())
    }
}

/// Either utility specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UtilitySpec {
    Linear(LinearUtility),
    Nonlinear(NonlinearUtility),
}

impl UtilitySpec {
    pub fn eval(&self, t: Point, b: &Bundle) -> f64 {
        match self {
            UtilitySpec::Linear(u) => u.eval(t, b),
            UtilitySpec::Nonlinear(u) => u.eval(t, b),
        }
    }

    pub fn w(&self) -> &Weight {
        match self {
            UtilitySpec::Linear(u) => &u.w,
            UtilitySpec::Nonlinear(u) => &u.w,
        }
    }

    pub fn z(&self) -> &Weight {
        match self {
            UtilitySpec::Linear(u) => &u.z,
            UtilitySpec::Nonlinear(u) => &u.z,
        }
    }

    pub fn linear(&self) -> Result<&LinearUtility> {
        match self {
            UtilitySpec::Linear(u) => Ok(u),
            UtilitySpec::Nonlinear(_) => Err(Error::NotApplicable(
                "this construction needs a linear utility specification".into(),
            )),
        }
    }

    /// Nonlinear view; linear specs are lifted with the given cap.
    pub fn nonlinear(&self, q_bar: f64) -> NonlinearUtility {
        match self {
            UtilitySpec::Linear(u) => u.as_nonlinear(q_bar),
            UtilitySpec::Nonlinear(u) => *u,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1() -> LinearUtility {
        LinearUtility::new(
            Weight::Exponential { a: 1.0, b: 1.0 },
            Weight::Exponential { a: 1.0, b: -1.0 },
        )
    }

    #[test]
    fn linear_plug_in() {
        let u = s1();
        assert_eq!(u.eval(Point::new(0.0, 1.0), &Bundle::ZERO), 0.0);
        assert!((u.eval(Point::new(0.0, 1.0), &Bundle::new(1.0, 0.5, 0.25)) - 0.25).abs() < 1e-15);
        let e = 1f64.exp();
        let got = u.eval(Point::new(1.0, 2.0), &Bundle::new(1.0, 1.0, 1.0));
        assert!((got - (2.0 - e - 1.0 / e)).abs() < 1e-12);
        assert!((got - -1.086161).abs() < 1e-6);
    }

    #[test]
    fn lifted_linear_agrees() {
        let u = s1();
        let nl = u.as_nonlinear(5.0);
        let t = Point::new(0.3, 1.4);
        let b = Bundle::new(0.7, 0.2, 0.9);
        assert!((u.eval(t, &b) - nl.eval(t, &b)).abs() < 1e-15);
    }

    #[test]
    fn ordeal_cost_inverse() {
        let h = OrdealCost::Quadratic { c: 0.8 };
        let q = 1.3;
        assert!((h.inverse(h.h(q)) - q).abs() < 1e-14);
    }
}
