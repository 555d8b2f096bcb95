//! Reference values computed outside this crate (closed forms evaluated at
//! 25 significant digits, plus direct grid scans) and frozen here.

#![allow(clippy::excessive_precision)]

use equiscreen::construct::{
    build_certified_threshold, build_conditional, build_knife_edge_ordeal, build_mixture,
    build_one_step_ordeal, build_payment_screening, decompose_increasing, one_step_ordeal,
    IncreasingAllocation, Interpolation, Mechanism,
};
use equiscreen::fairness::{iso_slopes, payment_lower_bound, JumpData, Levels};
use equiscreen::model::{Instrument, LinearUtility, Merit, Side, UtilitySpec, Weight};
use equiscreen::reparam::{alpha_of_lambda, bounding_rectangle, kappa_star, merit_kl, to_kl};
use equiscreen::verify::{check_equity, check_ic, check_ir, knife_edge_diagnostic};
use equiscreen::{make_grid, Bundle, Point, TypeSpace};

const U_AT_1_2: f64 = -1.086161269630487557;
const KAPPA_AT_1_2: f64 = 0.7357588823428846432;
const LAMBDA_AT_1_2: f64 = -0.1353352832366126919;
const KSTAR_AT_LAMBDA_HI: f64 = 0.3678794411714423216;
const MAX_D1: f64 = std::f64::consts::E;
const MAX_D2: f64 = 5.021384230796916935;
const M1: f64 = 3.397852285573806544;
const M2: f64 = 6.276730288496146169;
const ZETA: f64 = 7.845912860620182711;
const PSI: f64 = 11.18193630695217471;
const ONE_MINUS_TWO_OVER_E: f64 = 0.2642411176571153568;
const Q_B: f64 = 0.2473081906050192220;
const BOUND_SLOPE_HALF: f64 = 1.107148717794090503;
const BOUND_SLOPE_THREE: f64 = 0.3217505543966421934;
/// Nodes of the 41x41 grid with `beta e^alpha >= 3`.
const KNIFE_EDGE_SERVED: usize = 494;

fn s1() -> LinearUtility {
    LinearUtility::new(
        Weight::Exponential { a: 1.0, b: 1.0 },
        Weight::Exponential { a: 1.0, b: -1.0 },
    )
}

fn unit() -> TypeSpace {
    TypeSpace::new(0.0, 1.0, 1.0, 2.0).unwrap()
}

const SUM: Merit = Merit::WeightedSum { a: 1.0, b: 1.0 };

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

#[test]
fn utility_substitution() {
    let u = s1();
    close(
        u.eval(Point::new(1.0, 2.0), &Bundle::new(1.0, 1.0, 1.0)),
        U_AT_1_2,
        1e-14,
    );
}

#[test]
fn reparametrisation_values() {
    let u = s1();
    let (k, l) = to_kl(&u, Point::new(1.0, 2.0));
    close(k, KAPPA_AT_1_2, 1e-15);
    close(l, LAMBDA_AT_1_2, 1e-15);
    close(alpha_of_lambda(&u, LAMBDA_AT_1_2).unwrap(), 1.0, 1e-10);
    close(
        merit_kl(&u, &SUM, KSTAR_AT_LAMBDA_HI, LAMBDA_AT_1_2).unwrap(),
        2.0,
        1e-10,
    );
    close(
        kappa_star(&u, &SUM, 2.0, LAMBDA_AT_1_2).unwrap(),
        KSTAR_AT_LAMBDA_HI,
        1e-10,
    );
    close(kappa_star(&u, &SUM, 2.0, -1.0).unwrap(), 2.0, 1e-10);

    let r = bounding_rectangle(&u, &unit());
    close(r.kappa_lo, KSTAR_AT_LAMBDA_HI, 1e-8);
    close(r.kappa_hi, 2.0, 1e-8);
    close(r.lambda_lo, -1.0, 1e-8);
    close(r.lambda_hi, LAMBDA_AT_1_2, 1e-8);
}

#[test]
fn curvature_bounds_and_constants() {
    let th = build_certified_threshold(&s1(), &SUM, &unit(), 2.0, Side::Low, 0.25).unwrap();
    let b = th.bounds.unwrap();
    // the maxima sit at the right end of the lambda interval, which is sampled
    close(b.max_d1, MAX_D1, 1e-6);
    close(b.max_d2, MAX_D2, 1e-5);
    close(b.m1, M1, 1e-5);
    close(b.m2, M2, 1e-5);
    close(th.constants.zeta, ZETA, 1e-5);
    close(th.constants.psi, PSI, 1e-5);
}

#[test]
fn ramp_decomposes_into_quarters() {
    let xhat =
        IncreasingAllocation::new(vec![(1.0, 0.0), (3.0, 1.0)], Interpolation::Linear).unwrap();
    let parts = decompose_increasing(&xhat, (1.0, 3.0), 4).unwrap();
    let got: Vec<(f64, f64)> = parts.iter().map(|c| (c.weight, c.eta_star)).collect();
    for (g, want) in got
        .iter()
        .zip([(0.25, 1.5), (0.25, 2.0), (0.25, 2.5), (0.25, 3.0)])
    {
        close(g.0, want.0, 1e-15);
        close(g.1, want.1, 1e-15);
    }
    assert_eq!(got.len(), 4);
}

#[test]
fn mixture_sup_error_on_fine_grid() {
    let xhat =
        IncreasingAllocation::new(vec![(1.0, 0.0), (3.0, 1.0)], Interpolation::Linear).unwrap();
    let m = Mechanism::Mixture(build_mixture(&s1(), &SUM, &unit(), &xhat, 100, 0.25).unwrap());
    let grid = make_grid(unit(), 101, 101).unwrap();
    let sup = grid
        .nodes()
        .into_iter()
        .map(|t| (m.allocation(t) - (t.alpha + t.beta - 1.0) / 2.0).abs())
        .fold(0.0, f64::max);
    assert!(sup <= 0.01, "{sup}");
}

#[test]
fn conditional_slice_transfer() {
    let xhat = IncreasingAllocation::new(vec![(2.0, 1.0)], Interpolation::Step).unwrap();
    let m = build_conditional(&s1(), &SUM, &unit(), &xhat, Instrument::Payments).unwrap();
    for beta in [1.2, 1.49] {
        close(m.transfer(Point::new(0.5, beta)), 0.0, 1e-12);
    }
    for beta in [1.51, 1.7, 1.99] {
        close(m.transfer(Point::new(0.5, beta)), 1.5, 1e-12);
    }
}

#[test]
fn knife_edge_serves_the_aligned_upper_set() {
    let aligned = Merit::Product { c: 1.0 };
    let menu = build_knife_edge_ordeal(&s1(), &aligned, &unit(), 3.0).unwrap();
    let m = Mechanism::Menu(menu);
    let grid = make_grid(unit(), 41, 41).unwrap();
    let served = grid
        .nodes()
        .into_iter()
        .filter(|&t| m.allocation(t) == 1.0)
        .count();
    assert_eq!(served, KNIFE_EDGE_SERVED);
    let spec = UtilitySpec::Linear(s1());
    assert!(check_ic(&m, &spec, &grid, 1e-9).max_gain <= 1e-9);
    assert_eq!(
        check_equity(&m, &aligned, &grid, 20).unwrap().max_spread,
        0.0
    );
}

#[test]
fn knife_edge_dispersion_on_sum_merit() {
    let d = knife_edge_diagnostic(
        &UtilitySpec::Linear(s1()),
        &SUM,
        &unit(),
        2.0,
        0.0,
        0.0,
        128,
    )
    .unwrap();
    close(d.dispersion, ONE_MINUS_TWO_OVER_E, 1e-9);
}

#[test]
fn one_step_ordeal_root() {
    let u = s1().as_nonlinear(5.0);
    let anchor = Point::new(0.5, 1.5);
    close(one_step_ordeal(&u, anchor, 0.1).unwrap(), Q_B, 1e-10);
    let menu = Mechanism::Menu(build_one_step_ordeal(&u, anchor, 0.1).unwrap());
    let spec = UtilitySpec::Nonlinear(u);
    let grid = make_grid(unit(), 101, 101).unwrap();
    assert!(check_ic(&menu, &spec, &grid, 1e-8).pass);
    assert!(check_ir(&menu, &spec, &grid, 1e-8).pass);
    let take = spec.eval(anchor, &Bundle::new(0.1, 0.0, Q_B));
    close(take, 0.0, 1e-10);
}

#[test]
fn linear_slopes() {
    let u = s1().as_nonlinear(5.0);
    for (a, b) in [(0.1, 1.1), (0.5, 1.5), (0.9, 1.95)] {
        let t = Point::new(a, b);
        let (s, _) = iso_slopes(
            &u,
            Instrument::Ordeals,
            t,
            Levels::Smooth { x: 0.3, q: 1.0 },
        )
        .unwrap();
        close(s, -b, 1e-9);
        let jump = Levels::Jump(JumpData {
            x: 0.0,
            x_plus: 0.7,
            q: 0.0,
            q_plus: 2.0,
        });
        let (s, _) = iso_slopes(&u, Instrument::Ordeals, t, jump).unwrap();
        close(s, -b, 1e-9);
        let (s, _) = iso_slopes(
            &u,
            Instrument::Payments,
            t,
            Levels::Smooth { x: 0.3, q: 1.0 },
        )
        .unwrap();
        close(s, b, 1e-9);
    }
}

#[test]
fn payment_bounds() {
    let grid = make_grid(unit(), 11, 11).unwrap();
    close(
        payment_lower_bound(&SUM, &grid),
        std::f64::consts::FRAC_PI_4,
        1e-12,
    );
    close(
        payment_lower_bound(&Merit::WeightedSum { a: 1.0, b: 2.0 }, &grid),
        BOUND_SLOPE_HALF,
        1e-12,
    );
    close(
        payment_lower_bound(&Merit::WeightedSum { a: 3.0, b: 1.0 }, &grid),
        BOUND_SLOPE_THREE,
        1e-12,
    );
}

#[test]
fn payment_screening_is_not_equitable() {
    let u = s1();
    let r = bounding_rectangle(&u, &unit());
    let phi = IncreasingAllocation::new(
        vec![(r.kappa_lo, 0.0), (r.kappa_hi, 1.0)],
        Interpolation::Linear,
    )
    .unwrap();
    let m = Mechanism::PaymentScreening(build_payment_screening(&u, &unit(), &phi).unwrap());
    let grid = make_grid(unit(), 41, 41).unwrap();
    let eq = check_equity(&m, &SUM, &grid, 20).unwrap();
    assert!(eq.max_spread >= 0.1, "{}", eq.max_spread);
    assert!(check_ic(&m, &UtilitySpec::Linear(u), &grid, 1e-8).pass);
}
