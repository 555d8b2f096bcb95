//! Small linear programs, solved with `minilp`.

use crate::error::{Error, Result};
use minilp::{ComparisonOp, OptimizationDirection, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

impl Row {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Signed slack; negative means violated.
    pub fn slack(&self, x: &[f64]) -> f64 {
        let l = self.lhs(x);
        match self.cmp {
            Cmp::Ge => l - self.rhs,
            Cmp::Le => self.rhs - l,
            Cmp::Eq => -(l - self.rhs).abs(),
        }
    }
}

/// `max objective . x` subject to `rows` and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub bounds: Vec<(f64, f64)>,
    pub rows: Vec<Row>,
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        let n = bounds.len();
        LinearProgram {
            bounds,
            rows: Vec::new(),
            objective: vec![0.0; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn push(&mut self, coeffs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push(Row { coeffs, cmp, rhs });
    }

    pub fn maximize(&self) -> Result<LpSolution> {
        let mut p = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = self
            .bounds
            .iter()
            .zip(&self.objective)
            .map(|(&b, &c)| p.add_var(c, b))
            .collect();
        for r in &self.rows {
            let expr: Vec<_> = r.coeffs.iter().map(|&(j, c)| (vars[j], c)).collect();
            let op = match r.cmp {
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Le => ComparisonOp::Le,
                Cmp::Eq => ComparisonOp::Eq,
            };
            p.add_constraint(expr.as_slice(), op, r.rhs);
        }
        let sol = p.solve().map_err(|e| Error::SolverFailure(e.to_string()))?;
        Ok(LpSolution {
            values: vars.iter().map(|v| *sol.var_value(*v)).collect(),
            objective: sol.objective(),
        })
    }

    /// Smallest slack over rows and bounds at `x`.
    pub fn min_slack(&self, x: &[f64]) -> f64 {
        let rows = self
            .rows
            .iter()
            .map(|r| r.slack(x))
            .fold(f64::INFINITY, f64::min);
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (v - lo).min(hi - v))
            .fold(f64::INFINITY, f64::min);
        rows.min(bounds)
    }
}
