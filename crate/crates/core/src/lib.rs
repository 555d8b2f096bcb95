//! Numerical laboratory for screening mechanisms under an equal-merit,
//! equal-allocation constraint.
//!
//! The crate is organised around the objects a mechanism designer works
//! with:
//!
//! * [`model`]: type space, utility and merit families, grids, scenarios.
//! * [`reparam`]: the `(kappa, lambda)` change of variables and the
//!   threshold curve `kappa*(lambda)` with its curvature bounds.
//! * [`construct`]: threshold, mixture, observable-wealth, knife-edge and
//!   one-step ordeal mechanisms.
//! * [`verify`]: brute-force IC/IR, equity, merit monotonicity, convexity
//!   certificates, single-instrument LP probes and the knife-edge diagnostic.
//! * [`fairness`]: angle-based equity-violation measures and the
//!   payments-versus-ordeals comparison.
//! * [`io`] and [`cli`]: scenario files, reports and the batch front door.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod construct;
pub mod contour;
pub mod error;
pub mod fairness;
pub mod interp;
pub mod io;
pub mod lp;
pub mod model;
pub mod numeric;
pub mod reparam;
pub mod verify;

pub use error::{Error, Result};
pub use model::{make_grid, Bundle, Grid, Point, TypeSpace};

/// Tool version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
