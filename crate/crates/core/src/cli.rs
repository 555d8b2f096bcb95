//! Batch front door: `equiscreen <verb> --scenario <path> [options]`.
//!
//! Exit codes: 0 when every check passes or the artifact was written, 1 when
//! a check failed (reports are still written), 2 on usage, parse or
//! construction errors. `EQUISCREEN_THREADS` caps the worker pool.

use crate::construct::{
    build_certified_threshold, build_from_scenario, reconstruction_bound, Mechanism,
};
use crate::error::{Error, Result};
use crate::fairness::{
    compare_instruments, global_violation, payment_lower_bound, AllocationField,
};
use crate::io::{atomic_write, csv_table, load_scenario, CheckEntry, Report};
use crate::model::{make_grid, validate_scenario, Instrument, MechanismKind, Scenario};
use crate::reparam::bounding_rectangle;
use crate::verify::{
    check_convexity, check_equity, check_ic, check_ir, check_merit_monotone, knife_edge_diagnostic,
    probe_single_instrument, ProbeMode, ProbeOptions,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const THREADS_ENV: &str = "EQUISCREEN_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "equiscreen",
    version,
    about = "Construct, verify and score equitable screening mechanisms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        self != Format::Csv
    }
    fn csv(self) -> bool {
        self != Format::Json
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for every random sampler.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Override a scenario key, as `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InstrumentArg {
    Payments,
    Ordeals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// One menu item per merit class.
    Classes,
    /// One item per grid node (no equity coupling).
    PerNode,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Check the scenario's standing assumptions.
    Validate(Common),
    /// Build the configured mechanism and dump its bundles.
    Construct(Common),
    /// IC, IR, equity, monotonicity and convexity checks.
    Verify(Common),
    /// Single-instrument LP probe on a small grid.
    Probe {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        instrument: Option<InstrumentArg>,
        #[arg(long, value_enum, default_value_t = ModeArg::Classes)]
        mode: ModeArg,
    },
    /// Equity-violation angle of the configured mechanism.
    Score(Common),
    /// One-step ordeal mechanism against the payment lower bound.
    Compare(Common),
    /// Threshold curve table and allocation field as CSV.
    Export(Common),
}

impl Verb {
    fn common(&self) -> &Common {
        match self {
            Verb::Validate(c)
            | Verb::Construct(c)
            | Verb::Verify(c)
            | Verb::Score(c)
            | Verb::Compare(c)
            | Verb::Export(c) => c,
            Verb::Probe { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Verb::Validate(_) => "validate",
            Verb::Construct(_) => "construct",
            Verb::Verify(_) => "verify",
            Verb::Probe { .. } => "probe",
            Verb::Score(_) => "score",
            Verb::Compare(_) => "compare",
            Verb::Export(_) => "export",
        }
    }
}

/// Parses arguments, runs the verb and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match execute(&cli.verb) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("equiscreen {}: {e}", cli.verb.name());
            2
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // a pool may already exist when run is called twice in one process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

struct Output<'a> {
    dir: &'a Path,
    format: Format,
}

impl Output<'_> {
    fn report(&self, name: &str, r: &Report) -> Result<()> {
        if self.format.json() {
            atomic_write(
                &self.dir.join(format!("{name}.json")),
                r.to_json().as_bytes(),
            )?;
        }
        if self.format.csv() {
            atomic_write(
                &self.dir.join(format!("{name}.csv")),
                r.checks_csv().as_bytes(),
            )?;
        }
        Ok(())
    }

    fn table(&self, name: &str, text: String) -> Result<()> {
        atomic_write(&self.dir.join(name), text.as_bytes())
    }
}

/// Runs a verb; `Ok(pass)` once its reports are written.
pub fn execute(verb: &Verb) -> Result<bool> {
    let c = verb.common();
    if !c.scenario.is_file() {
        return Err(Error::Io(format!(
            "scenario file {} not found",
            c.scenario.display()
        )));
    }
    let s = load_scenario(&c.scenario, &c.overrides)?;
    let out = Output {
        dir: &c.out,
        format: c.format,
    };
    let mut r = Report::new(verb.name(), &s, c.seed);
    match verb {
        Verb::Validate(_) => validate(&s, &mut r)?,
        Verb::Construct(_) => construct(&s, &mut r, &out)?,
        Verb::Verify(_) => verify(&s, &mut r, c.seed)?,
        Verb::Probe {
            instrument, mode, ..
        } => probe(&s, &mut r, *instrument, *mode)?,
        Verb::Score(_) => score(&s, &mut r, &out)?,
        Verb::Compare(_) => compare(&s, &mut r, c.seed)?,
        Verb::Export(_) => export(&s, &mut r, &out)?,
    }
    out.report(verb.name(), &r)?;
    Ok(r.pass)
}

fn validate(s: &Scenario, r: &mut Report) -> Result<()> {
    let v = validate_scenario(s)?;
    for c in &v.checks {
        r.push(CheckEntry::new(c.name, c.pass, c.value, None, c.witness));
    }
    r.set_details(
        json!({ "merit_range": v.merit_range, "merit_gradient_floor": v.merit_gradient_floor }),
    );
    Ok(())
}

#[derive(Serialize)]
struct MechanismSummary {
    name: &'static str,
    merit_measurable: bool,
    observable_alpha: bool,
    parameters: serde_json::Value,
}

fn summarize(m: &Mechanism) -> MechanismSummary {
    let parameters = match m {
        Mechanism::Threshold(t) => json!({
            "eta_star": t.eta_star, "side": t.side, "constants": t.constants,
            "bounds": t.bounds, "rect": t.rect, "payment_shift": t.payment_shift,
        }),
        Mechanism::Mixture(x) => json!({ "n": x.n, "components": x.weights(), "xhat": x.xhat }),
        Mechanism::Conditional(x) => json!({ "instrument": x.instrument, "xhat": x.xhat }),
        Mechanism::Menu(x) => json!({ "kind": x.kind, "items": x.items }),
        Mechanism::PaymentScreening(x) => json!({ "phi": x.phi, "kappa_lo": x.kappa_lo }),
        Mechanism::Sampled(x) => json!({ "nodes": x.bundles.len() }),
    };
    MechanismSummary {
        name: m.name(),
        merit_measurable: m.merit_measurable(),
        observable_alpha: m.observable_alpha(),
        parameters,
    }
}

fn construct(s: &Scenario, r: &mut Report, out: &Output) -> Result<()> {
    let m = build_from_scenario(s)?;
    let grid = s.grid()?;
    r.set_details(summarize(&m));
    if out.format.csv() {
        let rows: Vec<Vec<f64>> = grid
            .nodes()
            .into_iter()
            .zip(m.bundles_on(&grid))
            .map(|(t, b)| {
                vec![
                    t.alpha,
                    t.beta,
                    s.merit.eval(t.alpha, t.beta),
                    b.x,
                    b.p,
                    b.q,
                ]
            })
            .collect();
        out.table(
            "bundles.csv",
            csv_table(&["alpha", "beta", "eta", "x", "p", "q"], &rows),
        )?;
    }
    Ok(())
}

/// The `verify` report for a scenario, without writing anything.
pub fn verify_report(s: &Scenario, seed: u64) -> Result<Report> {
    let mut r = Report::new("verify", s, seed);
    verify(s, &mut r, seed)?;
    Ok(r)
}

fn verify(s: &Scenario, r: &mut Report, seed: u64) -> Result<()> {
    let m = build_from_scenario(s)?;
    let grid = s.grid()?;
    let tol = &s.tolerances;
    let ic = check_ic(&m, &s.utility, &grid, tol.ic);
    r.push(CheckEntry::new(
        "ic",
        ic.pass,
        ic.max_gain,
        Some(tol.ic),
        &ic,
    ));
    let ir = check_ir(&m, &s.utility, &grid, tol.ir);
    r.push(CheckEntry::new(
        "ir",
        ir.pass,
        ir.min_utility,
        Some(-tol.ir),
        &ir,
    ));
    let eq = check_equity(&m, &s.merit, &grid, tol.equity_bins)?;
    r.push(CheckEntry::new(
        "equity",
        eq.pass(tol.equity),
        eq.max_spread,
        Some(tol.equity),
        &eq,
    ));
    match check_merit_monotone(&m, &s.merit, &grid, tol) {
        Ok(mono) => r.push(CheckEntry::new(
            "merit_monotone",
            mono.pass,
            mono.max_decrease,
            Some(tol.monotone),
            &mono,
        )),
        Err(e @ Error::NotEquitable { .. }) => r.push(CheckEntry::new(
            "merit_monotone",
            false,
            f64::NAN,
            Some(tol.monotone),
            e.to_string(),
        )),
        Err(e) => return Err(e),
    }
    match &m {
        Mechanism::Threshold(t) => {
            let cx = check_convexity(t, tol.convexity_trials, seed, tol.convexity)?;
            r.push(CheckEntry::new(
                "convexity",
                cx.pass,
                cx.midpoint_min_defect.min(cx.subgradient_min_defect),
                Some(-tol.convexity),
                &cx,
            ));
        }
        Mechanism::Mixture(x) => {
            // V of a mixture is the weighted sum of component V's
            let per = (tol.convexity_trials / x.components.len().max(1)).max(1000);
            let mut worst = (f64::INFINITY, None);
            for (k, (_, t)) in x.components.iter().enumerate() {
                let cx = check_convexity(t, per, seed.wrapping_add(k as u64), tol.convexity)?;
                let d = cx.midpoint_min_defect.min(cx.subgradient_min_defect);
                if d < worst.0 {
                    worst = (d, Some((t.eta_star, cx)));
                }
            }
            let d = if x.components.is_empty() {
                0.0
            } else {
                worst.0
            };
            r.push(CheckEntry::new(
                "convexity",
                d >= -tol.convexity,
                d,
                Some(-tol.convexity),
                &worst.1,
            ));
            let range = s.merit_range();
            let bound = reconstruction_bound(&x.xhat, range, x.n);
            let err = grid
                .nodes()
                .into_iter()
                .map(|t| (m.allocation(t) - x.xhat.eval(s.merit.eval(t.alpha, t.beta))).abs())
                .fold(0.0, f64::max);
            r.push(CheckEntry::new(
                "reconstruction",
                err <= bound + 1e-12,
                err,
                Some(bound),
                (),
            ));
        }
        _ => {}
    }
    r.set_details(summarize(&m));
    Ok(())
}

fn probe(
    s: &Scenario,
    r: &mut Report,
    instrument: Option<InstrumentArg>,
    mode: ModeArg,
) -> Result<()> {
    let instrument = match instrument {
        Some(InstrumentArg::Payments) => Instrument::Payments,
        Some(InstrumentArg::Ordeals) => Instrument::Ordeals,
        None => s.probe.instrument,
    };
    let grid = make_grid(s.space, s.probe.n_alpha, s.probe.n_beta)?;
    let opts = ProbeOptions {
        n_levels: s.probe.n_levels,
        edge_points: s.probe.edge_points,
        mode: match mode {
            ModeArg::Classes => ProbeMode::MeritClasses,
            ModeArg::PerNode => ProbeMode::PerNode,
        },
    };
    let p = probe_single_instrument(&s.utility, &s.merit, &grid, instrument, &opts)?;
    r.push(CheckEntry::new(
        "probe_soundness",
        p.sound,
        p.min_slack,
        Some(-1e-9),
        (),
    ));
    r.push(CheckEntry::new(
        "max_equitable_spread",
        true,
        p.max_equitable_spread,
        None,
        &p.certificate,
    ));
    let (lo, hi) = s.merit_range();
    let knife = if instrument == Instrument::Ordeals {
        knife_edge_diagnostic(
            &s.utility,
            &s.merit,
            &s.space,
            0.5 * (lo + hi),
            0.0,
            0.0,
            64,
        )
        .ok()
    } else {
        None
    };
    r.set_details(json!({ "probe": p, "knife_edge": knife }));
    Ok(())
}

fn score(s: &Scenario, r: &mut Report, out: &Output) -> Result<()> {
    let m = build_from_scenario(s)?;
    let grid = s.grid()?;
    let field = AllocationField::new(&m, &grid);
    let v = global_violation(&field, &s.merit, s.tolerances.tau);
    let bound = payment_lower_bound(&s.merit, &grid);
    r.push(CheckEntry::new(
        "global_violation",
        true,
        v.global,
        None,
        v.witness,
    ));
    r.push(CheckEntry::new(
        "payment_lower_bound",
        true,
        bound,
        None,
        (),
    ));
    if out.format.csv() {
        let rows: Vec<Vec<f64>> = grid
            .nodes()
            .into_iter()
            .zip(&v.locals)
            .map(|(t, &l)| vec![t.alpha, t.beta, l])
            .collect();
        out.table(
            "violations.csv",
            csv_table(&["alpha", "beta", "local"], &rows),
        )?;
    }
    r.set_details(json!({
        "mechanism": m.name(), "global": v.global, "witness": v.witness, "witness_kind": v.witness_kind,
        "jump_points": v.jump_points, "jump_max": v.jump_max, "tau": v.tau, "resolution_deg": v.resolution_deg,
    }));
    Ok(())
}

fn compare(s: &Scenario, r: &mut Report, seed: u64) -> Result<()> {
    let q_bar = s
        .q_bar
        .ok_or_else(|| Error::MalformedScenario("compare needs utility.q_bar".into()))?;
    let u = s.utility.nonlinear(q_bar);
    let anchor = s.mechanism.anchor.unwrap_or_else(|| s.space.center());
    let x_b = s.mechanism.x_b.unwrap_or(0.1);
    let grid = s.grid()?;
    match compare_instruments(&u, &s.merit, &grid, anchor, x_b, s.tolerances.tau, seed) {
        Ok(c) => {
            r.push(CheckEntry::new(
                "verdict",
                c.verdict,
                c.ordeal_violation.global,
                Some(c.payment_bound),
                (),
            ));
            let mut details = serde_json::to_value(&c).unwrap_or_default();
            if let Some(v) = details
                .get_mut("ordeal_violation")
                .and_then(|v| v.as_object_mut())
            {
                v.remove("locals");
            }
            details["applicable"] = json!(true);
            r.details = details;
        }
        Err(Error::NotApplicable(why)) => {
            r.set_details(json!({ "applicable": false, "reason": why }));
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn export(s: &Scenario, r: &mut Report, out: &Output) -> Result<()> {
    let u = s.utility.linear()?;
    let (lo, hi) = s.merit_range();
    let eta_star = s.mechanism.eta_star.unwrap_or(0.5 * (lo + hi));
    let th = build_certified_threshold(
        u,
        &s.merit,
        &s.space,
        eta_star,
        s.mechanism.side,
        s.mechanism.margin,
    )?;
    let curve = th.curve(crate::construct::CURVE_SAMPLES)?;
    let rows: Vec<Vec<f64>> = (0..curve.lambdas.len())
        .map(|i| vec![curve.lambdas[i], curve.kappa[i], curve.d1[i], curve.d2[i]])
        .collect();
    out.table(
        "threshold_curve.csv",
        csv_table(&["lambda", "kappa_star", "d1", "d2"], &rows),
    )?;

    let m = match s.mechanism.kind {
        MechanismKind::Threshold => Mechanism::Threshold(th.clone()),
        _ => build_from_scenario(s)?,
    };
    let grid = s.grid()?;
    let rows: Vec<Vec<f64>> = grid
        .nodes()
        .into_iter()
        .zip(m.bundles_on(&grid))
        .map(|(t, b)| {
            let (k, l) = crate::reparam::to_kl(u, t);
            vec![
                t.alpha,
                t.beta,
                k,
                l,
                s.merit.eval(t.alpha, t.beta),
                b.x,
                b.p,
                b.q,
            ]
        })
        .collect();
    out.table(
        "field.csv",
        csv_table(
            &["alpha", "beta", "kappa", "lambda", "eta", "x", "p", "q"],
            &rows,
        ),
    )?;
    let rect = bounding_rectangle(u, &s.space);
    r.set_details(json!({
        "eta_star": eta_star, "bounds": th.bounds, "constants": th.constants, "rect": rect,
        "curve_rows": curve.lambdas.len(), "mechanism": m.name(),
    }));
    Ok(())
}
