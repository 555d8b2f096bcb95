//! Sectioned `key = value` scenario files.
//!
//! ```text
//! [domain]
//! alpha = 0 1
//! beta = 1 2
//!
//! [utility]
//! kind = linear            # or nonlinear
//! w = exp(1, 1)            # exp(a,b) | power(a,c,k) | affine(a,b)
//! z = exp(1, -1)
//! v = linear               # nonlinear only: linear | log(gamma) | log_product
//! cost = linear            # nonlinear only: linear | quadratic(c)
//! q_bar = 5
//!
//! [merit]
//! eta = weighted_sum(1, 1) # or product(c)
//!
//! [grid]
//! n_alpha = 41
//! n_beta = 41
//! ```
//!
//! Optional sections `[tolerances]`, `[mechanism]` and `[probe]` override
//! defaults; see `KEYS` for the full list. `#` starts a comment.

use crate::error::{Error, Result};
use crate::model::{
    GoodValue, Instrument, LinearUtility, MechanismKind, Merit, NonlinearUtility, OrdealCost,
    Point, Scenario, Side, TypeSpace, UtilitySpec, Weight, XhatSpec,
};

/// Every recognised `section.key`.
pub const KEYS: &[&str] = &[
    "domain.alpha",
    "domain.beta",
    "utility.kind",
    "utility.w",
    "utility.z",
    "utility.v",
    "utility.cost",
    "utility.q_bar",
    "merit.eta",
    "grid.n_alpha",
    "grid.n_beta",
    "tolerances.ic",
    "tolerances.ir",
    "tolerances.equity",
    "tolerances.monotone",
    "tolerances.convexity",
    "tolerances.equity_bins",
    "tolerances.convexity_trials",
    "tolerances.tau",
    "mechanism.kind",
    "mechanism.eta_star",
    "mechanism.side",
    "mechanism.xhat",
    "mechanism.n_components",
    "mechanism.margin",
    "mechanism.instrument",
    "mechanism.q_star",
    "mechanism.anchor",
    "mechanism.x_b",
    "probe.n_alpha",
    "probe.n_beta",
    "probe.n_levels",
    "probe.instrument",
    "probe.edge_points",
];

const REQUIRED: &[&str] = &[
    "domain.alpha",
    "domain.beta",
    "utility.w",
    "utility.z",
    "merit.eta",
];

/// A `section.key = value` entry; line 0 marks a command-line override.
#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Entry>> {
    let mut section: Option<String> = None;
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("unterminated section header `{s}`")))?
                .trim();
            if !KEYS.iter().any(|k| k.starts_with(&format!("{name}."))) {
                return Err(err(line, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, found `{s}`")))?;
        let sec = section
            .as_ref()
            .ok_or_else(|| err(line, "key outside of any section"))?;
        let key = format!("{sec}.{}", k.trim());
        if !KEYS.contains(&key.as_str()) {
            return Err(err(line, format!("unknown key `{}` in [{sec}]", k.trim())));
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(err(
                line,
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        out.push(Entry {
            key,
            value: v.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

fn apply_overrides(entries: &mut Vec<Entry>, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| err(0, format!("override `{o}` is not `section.key=value`")))?;
        let key = k.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(err(0, format!("override names unknown key `{key}`")));
        }
        let value = v.trim().to_string();
        match entries.iter_mut().find(|e| e.key == key) {
            Some(e) => {
                e.value = value;
                e.line = 0;
            }
            None => entries.push(Entry {
                key,
                value,
                line: 0,
            }),
        }
    }
    Ok(())
}

/// `name` or `name(a, b, ...)`.
fn call(e: &Entry) -> Result<(String, Vec<f64>)> {
    let s = e.value.trim();
    let Some(open) = s.find('(') else {
        return Ok((s.to_string(), Vec::new()));
    };
    let inner = s[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| err(e.line, format!("{}: missing `)` in `{s}`", e.key)))?;
    let args = inner
        .split(',')
        .filter(|a| !a.trim().is_empty())
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| err(e.line, format!("{}: `{}` is not a number", e.key, a.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((s[..open].trim().to_string(), args))
}

fn arity(e: &Entry, name: &str, args: &[f64], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(err(
            e.line,
            format!(
                "{}: {name} takes {n} parameter(s), got {}",
                e.key,
                args.len()
            ),
        ));
    }
    Ok(())
}

fn number(e: &Entry) -> Result<f64> {
    let v: f64 = e
        .value
        .parse()
        .map_err(|_| err(e.line, format!("{}: `{}` is not a number", e.key, e.value)))?;
    if !v.is_finite() {
        return Err(err(e.line, format!("{}: value must be finite", e.key)));
    }
    Ok(v)
}

fn count(e: &Entry) -> Result<usize> {
    e.value.parse().map_err(|_| {
        err(
            e.line,
            format!("{}: `{}` is not a non-negative integer", e.key, e.value),
        )
    })
}

fn pair(e: &Entry) -> Result<(f64, f64)> {
    let parts: Vec<&str> = e.value.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(err(
            e.line,
            format!("{}: expected two numbers `lo hi`", e.key),
        ));
    }
    let p = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| err(e.line, format!("{}: `{s}` is not a number", e.key)))
    };
    Ok((p(parts[0])?, p(parts[1])?))
}

fn weight(e: &Entry) -> Result<Weight> {
    let (name, a) = call(e)?;
    match name.as_str() {
        "exp" => arity(e, &name, &a, 2).map(|_| Weight::Exponential { a: a[0], b: a[1] }),
        "power" => arity(e, &name, &a, 3).map(|_| Weight::Power {
            a: a[0],
            c: a[1],
            k: a[2],
        }),
        "affine" => arity(e, &name, &a, 2).map(|_| Weight::Affine { a: a[0], b: a[1] }),
        _ => Err(err(
            e.line,
            format!("{}: unknown family `{name}` (exp, power, affine)", e.key),
        )),
    }
}

fn merit(e: &Entry) -> Result<Merit> {
    let (name, a) = call(e)?;
    match name.as_str() {
        "weighted_sum" => arity(e, &name, &a, 2).map(|_| Merit::WeightedSum { a: a[0], b: a[1] }),
        "product" => arity(e, &name, &a, 1).map(|_| Merit::Product { c: a[0] }),
        _ => Err(err(
            e.line,
            format!(
                "{}: unknown merit family `{name}` (weighted_sum, product)",
                e.key
            ),
        )),
    }
}

fn good_value(e: &Entry) -> Result<GoodValue> {
    let (name, a) = call(e)?;
    match name.as_str() {
        "linear" => arity(e, &name, &a, 0).map(|_| GoodValue::Linear),
        "log" => arity(e, &name, &a, 1).map(|_| GoodValue::Log { gamma: a[0] }),
        "log_product" => arity(e, &name, &a, 0).map(|_| GoodValue::LogProduct),
        _ => Err(err(
            e.line,
            format!(
                "{}: unknown value family `{name}` (linear, log, log_product)",
                e.key
            ),
        )),
    }
}

fn ordeal_cost(e: &Entry) -> Result<OrdealCost> {
    let (name, a) = call(e)?;
    match name.as_str() {
        "linear" => arity(e, &name, &a, 0).map(|_| OrdealCost::Linear),
        "quadratic" => arity(e, &name, &a, 1).map(|_| OrdealCost::Quadratic { c: a[0] }),
        _ => Err(err(
            e.line,
            format!(
                "{}: unknown ordeal cost `{name}` (linear, quadratic)",
                e.key
            ),
        )),
    }
}

/// `eta:x` pairs separated by commas, as in `1.5:0.2, 2.5:0.7`.
fn knots(e: &Entry, body: &str) -> Result<Vec<(f64, f64)>> {
    body.split(',')
        .filter(|k| !k.trim().is_empty())
        .map(|k| {
            let (a, b) = k.split_once(':').ok_or_else(|| {
                err(
                    e.line,
                    format!("{}: knot `{}` is not `eta:x`", e.key, k.trim()),
                )
            })?;
            let p = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| err(e.line, format!("{}: `{}` is not a number", e.key, s.trim())))
            };
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

fn xhat(e: &Entry) -> Result<XhatSpec> {
    let s = e.value.trim();
    for (prefix, step) in [("linear_table(", false), ("step_table(", true)] {
        if let Some(rest) = s.strip_prefix(prefix) {
            let body = rest
                .strip_suffix(')')
                .ok_or_else(|| err(e.line, format!("{}: missing `)`", e.key)))?;
            let k = knots(e, body)?;
            return Ok(if step {
                XhatSpec::StepTable { knots: k }
            } else {
                XhatSpec::LinearTable { knots: k }
            });
        }
    }
    let (name, a) = call(e)?;
    match name.as_str() {
        "ramp" => arity(e, &name, &a, 0).map(|_| XhatSpec::Ramp),
        "step" => arity(e, &name, &a, 1).map(|_| XhatSpec::Step { eta0: a[0] }),
        "constant" => arity(e, &name, &a, 1).map(|_| XhatSpec::Constant { c: a[0] }),
        _ => Err(err(
            e.line,
            format!(
                "{}: unknown allocation `{name}` (ramp, step, constant, linear_table, step_table)",
                e.key
            ),
        )),
    }
}

fn instrument(e: &Entry) -> Result<Instrument> {
    match e.value.as_str() {
        "payments" => Ok(Instrument::Payments),
        "ordeals" => Ok(Instrument::Ordeals),
        v => Err(err(
            e.line,
            format!("{}: `{v}` is not payments or ordeals", e.key),
        )),
    }
}

/// Parses scenario text, applying `section.key=value` overrides on top.
pub fn parse_scenario(text: &str, overrides: &[String]) -> Result<Scenario> {
    let mut entries = tokenize(text)?;
    apply_overrides(&mut entries, overrides)?;
    let get = |k: &str| entries.iter().find(|e| e.key == k);
    let last_line = text.lines().count().max(1);
    for k in REQUIRED {
        if get(k).is_none() {
            return Err(err(last_line, format!("missing required key `{k}`")));
        }
    }

    let (alo, ahi) = pair(get("domain.alpha").unwrap())?;
    let (blo, bhi) = pair(get("domain.beta").unwrap())?;
    let space = TypeSpace::new(alo, ahi, blo, bhi)
        .map_err(|e| err(get("domain.alpha").unwrap().line, e.to_string()))?;

    let w = weight(get("utility.w").unwrap())?;
    let z = weight(get("utility.z").unwrap())?;
    let q_bar = get("utility.q_bar").map(number).transpose()?;
    let kind = get("utility.kind")
        .map(|e| e.value.as_str())
        .unwrap_or("linear");
    let utility = match kind {
        "linear" => {
            for k in ["utility.v", "utility.cost"] {
                if let Some(e) = get(k) {
                    return Err(err(
                        e.line,
                        format!("`{k}` only applies to kind = nonlinear"),
                    ));
                }
            }
            UtilitySpec::Linear(LinearUtility::new(w, z))
        }
        "nonlinear" => UtilitySpec::Nonlinear(NonlinearUtility {
            v: get("utility.v")
                .map(good_value)
                .transpose()?
                .unwrap_or(GoodValue::Linear),
            w,
            z,
            ordeal_cost: get("utility.cost")
                .map(ordeal_cost)
                .transpose()?
                .unwrap_or(OrdealCost::Linear),
            q_bar: q_bar.unwrap_or(f64::INFINITY),
        }),
        other => {
            let line = get("utility.kind").unwrap().line;
            return Err(err(
                line,
                format!("utility.kind: `{other}` is not linear or nonlinear"),
            ));
        }
    };
    let m = merit(get("merit.eta").unwrap())?;

    let mut s = Scenario::new(space, utility, m);
    s.q_bar = q_bar;

    for e in &entries {
        match e.key.as_str() {
            "grid.n_alpha" => s.n_alpha = count(e)?,
            "grid.n_beta" => s.n_beta = count(e)?,
            "tolerances.ic" => s.tolerances.ic = number(e)?,
            "tolerances.ir" => s.tolerances.ir = number(e)?,
            "tolerances.equity" => s.tolerances.equity = number(e)?,
            "tolerances.monotone" => s.tolerances.monotone = number(e)?,
            "tolerances.convexity" => s.tolerances.convexity = number(e)?,
            "tolerances.equity_bins" => s.tolerances.equity_bins = count(e)?,
            "tolerances.convexity_trials" => s.tolerances.convexity_trials = count(e)?,
            "tolerances.tau" => s.tolerances.tau = number(e)?,
            "mechanism.kind" => {
                s.mechanism.kind = match e.value.as_str() {
                    "threshold" => MechanismKind::Threshold,
                    "mixture" => MechanismKind::Mixture,
                    "conditional" => MechanismKind::Conditional,
                    "knife_edge" => MechanismKind::KnifeEdge,
                    "one_step" => MechanismKind::OneStep,
                    v => {
                        return Err(err(
                            e.line,
                            format!("mechanism.kind: `{v}` is not threshold, mixture, conditional, knife_edge or one_step"),
                        ))
                    }
                }
            }
            "mechanism.eta_star" => s.mechanism.eta_star = Some(number(e)?),
            "mechanism.side" => {
                s.mechanism.side = match e.value.as_str() {
                    "low" => Side::Low,
                    "high" => Side::High,
                    v => return Err(err(e.line, format!("mechanism.side: `{v}` is not low or high"))),
                }
            }
            "mechanism.xhat" => s.mechanism.xhat = xhat(e)?,
            "mechanism.n_components" => s.mechanism.n_components = count(e)?,
            "mechanism.margin" => s.mechanism.margin = number(e)?,
            "mechanism.instrument" => s.mechanism.instrument = instrument(e)?,
            "mechanism.q_star" => s.mechanism.q_star = Some(number(e)?),
            "mechanism.anchor" => {
                let (a, b) = pair(e)?;
                s.mechanism.anchor = Some(Point::new(a, b));
            }
            "mechanism.x_b" => s.mechanism.x_b = Some(number(e)?),
            "probe.n_alpha" => s.probe.n_alpha = count(e)?,
            "probe.n_beta" => s.probe.n_beta = count(e)?,
            "probe.n_levels" => s.probe.n_levels = count(e)?,
            "probe.instrument" => s.probe.instrument = instrument(e)?,
            "probe.edge_points" => s.probe.edge_points = count(e)?,
            _ => {}
        }
    }
    s.check_parameters()?;
    Ok(s)
}

/// Canonical scenario S1: `w = e^alpha`, `z = e^-alpha`, `eta = alpha + beta` on `(0,1) x (1,2)`.
pub const S1: &str = "\
[domain]
alpha = 0 1
beta = 1 2

[utility]
kind = linear
w = exp(1, 1)
z = exp(1, -1)

[merit]
eta = weighted_sum(1, 1)

[grid]
n_alpha = 41
n_beta = 41

[mechanism]
kind = mixture
xhat = ramp
n_components = 100
";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_s1() {
        let s = parse_scenario(S1, &[]).unwrap();
        assert_eq!(s.space, TypeSpace::new(0.0, 1.0, 1.0, 2.0).unwrap());
        assert_eq!(s.merit, Merit::WeightedSum { a: 1.0, b: 1.0 });
        assert_eq!(s.mechanism.n_components, 100);
        assert_eq!(s.n_alpha, 41);
        assert!(matches!(s.utility, UtilitySpec::Linear(_)));
    }

    #[test]
    fn overrides_replace_and_add() {
        let s = parse_scenario(
            S1,
            &[
                "merit.eta=weighted_sum(1,2)".into(),
                "utility.q_bar=5".into(),
            ],
        )
        .unwrap();
        assert_eq!(s.merit, Merit::WeightedSum { a: 1.0, b: 2.0 });
        assert_eq!(s.q_bar, Some(5.0));
        let e = parse_scenario(S1, &["merit.nope=1".into()]).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 0, .. }));
    }

    #[test]
    fn errors_cite_lines() {
        let bad = S1.replace("w = exp(1, 1)", "w = exp(1)");
        assert!(matches!(
            parse_scenario(&bad, &[]),
            Err(Error::Parse { line: 7, .. })
        ));
        let bad = S1.replace("[grid]", "[gird]");
        assert!(matches!(
            parse_scenario(&bad, &[]),
            Err(Error::Parse { line: 13, .. })
        ));
        let bad = S1.replace("n_beta = 41", "n_beta = many");
        match parse_scenario(&bad, &[]) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 15);
                assert!(message.contains("n_beta"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tables_and_nonlinear() {
        let text = "[domain]\nalpha = 0 1\nbeta = 1 2\n[utility]\nkind = nonlinear\nw = exp(1,1)\nz = exp(1,-1)\n\
                    v = log(2)\ncost = quadratic(0.5)\nq_bar = 4\n[merit]\neta = product(1)\n\
                    [mechanism]\nxhat = step_table(1.5:0.2, 2.5:0.7)\nanchor = 0.5 1.5\n";
        let s = parse_scenario(text, &[]).unwrap();
        assert_eq!(
            s.mechanism.xhat,
            XhatSpec::StepTable {
                knots: vec![(1.5, 0.2), (2.5, 0.7)]
            }
        );
        assert_eq!(s.mechanism.anchor, Some(Point::new(0.5, 1.5)));
        match s.utility {
            UtilitySpec::Nonlinear(u) => {
                assert_eq!(u.v, GoodValue::Log { gamma: 2.0 });
                assert_eq!(u.q_bar, 4.0);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn malformed_parameters_are_rejected() {
        let bad = S1.replace("exp(1, -1)", "exp(-1, -1)");
        assert!(matches!(
            parse_scenario(&bad, &[]),
            Err(Error::MalformedScenario(_))
        ));
    }
}
