use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_equiscreen"))
}

fn s1(dir: &Path) -> PathBuf {
    let p = dir.join("s1.scenario");
    fs::write(&p, equiscreen::io::S1).unwrap();
    p
}

fn run(verb: &str, scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(verb)
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn validate_writes_a_passing_report() {
    let d = tempfile::tempdir().unwrap();
    let o = run("validate", &s1(d.path()), d.path(), &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = json(d.path().join("validate.json"));
    assert_eq!(r["pass"], true);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["command"], "validate");
    assert_eq!(r["scenario_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn failed_assumption_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        "validate",
        &s1(d.path()),
        d.path(),
        &["--set", "utility.z=exp(1,1)"],
    );
    assert_eq!(o.status.code(), Some(1));
    let r = json(d.path().join("validate.json"));
    assert_eq!(r["pass"], false);
    assert!(r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["pass"] == false));
}

#[test]
fn payments_probe_finds_only_constants() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        "probe",
        &s1(d.path()),
        d.path(),
        &["--instrument", "payments"],
    );
    assert_eq!(o.status.code(), Some(0));
    let r = json(d.path().join("probe.json"));
    let spread = r["details"]["probe"]["max_equitable_spread"]
        .as_f64()
        .unwrap();
    assert!(spread <= 1e-6, "{spread}");
}

#[test]
fn threshold_outside_the_merit_range_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        "construct",
        &s1(d.path()),
        d.path(),
        &[
            "--set",
            "mechanism.kind=threshold",
            "--set",
            "mechanism.eta_star=7",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("(1, 3)"), "{err}");
    assert!(!d.path().join("construct.json").exists());
}

#[test]
fn parse_errors_name_the_line() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("bad.scenario");
    fs::write(
        &p,
        "[domain]\nalpha = 0 1\nbeta = 1 2\n[merit]\neta = nonsense\n",
    )
    .unwrap();
    let o = run("validate", &p, d.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"));
}

#[test]
fn missing_scenario_and_unknown_verb_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let o = run("verify", &d.path().join("nope.scenario"), d.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_is_byte_identical_across_runs_and_thread_counts() {
    let d = tempfile::tempdir().unwrap();
    let s = s1(d.path());
    let mut reports = Vec::new();
    for threads in ["1", "4", "4"] {
        let out = d.path().join(format!("t{threads}-{}", reports.len()));
        let o = bin()
            .env("EQUISCREEN_THREADS", threads)
            .args(["verify", "--seed", "42", "--format", "both", "--scenario"])
            .arg(&s)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        reports.push((
            fs::read(out.join("verify.json")).unwrap(),
            fs::read(out.join("verify.csv")).unwrap(),
        ));
    }
    assert!(reports.windows(2).all(|w| w[0] == w[1]));
    let r: Value = serde_json::from_slice(&reports[0].0).unwrap();
    let names: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["check"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "ic",
            "ir",
            "equity",
            "merit_monotone",
            "convexity",
            "reconstruction"
        ]
    );
}

#[test]
fn seed_changes_only_the_seeded_parts() {
    let d = tempfile::tempdir().unwrap();
    let s = s1(d.path());
    run("verify", &s, &d.path().join("a"), &["--seed", "1"]);
    run("verify", &s, &d.path().join("b"), &["--seed", "2"]);
    let (a, b) = (
        json(d.path().join("a/verify.json")),
        json(d.path().join("b/verify.json")),
    );
    assert_eq!(a["checks"][0], b["checks"][0]);
    assert_ne!(a["seed"], b["seed"]);
}

#[test]
fn csv_format_writes_tables_only() {
    let d = tempfile::tempdir().unwrap();
    let o = run("construct", &s1(d.path()), d.path(), &["--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!d.path().join("construct.json").exists());
    let bundles = fs::read_to_string(d.path().join("bundles.csv")).unwrap();
    assert_eq!(bundles.lines().next(), Some("alpha,beta,eta,x,p,q"));
    assert_eq!(bundles.lines().count(), 1 + 41 * 41);
}

#[test]
fn compare_reports_verdict_and_not_applicable() {
    let d = tempfile::tempdir().unwrap();
    let s = s1(d.path());
    let o = run(
        "compare",
        &s,
        &d.path().join("half"),
        &[
            "--set",
            "merit.eta=weighted_sum(1,2)",
            "--set",
            "utility.q_bar=5",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let r = json(d.path().join("half/compare.json"));
    assert_eq!(r["details"]["applicable"], true);
    assert_eq!(r["details"]["verdict"], true);
    assert!((r["details"]["payment_bound"].as_f64().unwrap() - 1.1071487).abs() < 1e-6);

    let o = run(
        "compare",
        &s,
        &d.path().join("sum"),
        &["--set", "utility.q_bar=5"],
    );
    assert_eq!(o.status.code(), Some(0));
    let r = json(d.path().join("sum/compare.json"));
    assert_eq!(r["details"]["applicable"], false);
    assert!(r["checks"].as_array().unwrap().is_empty());
}

#[test]
fn score_and_export_write_their_tables() {
    let d = tempfile::tempdir().unwrap();
    let s = s1(d.path());
    let o = run("score", &s, d.path(), &["--format", "both"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(d.path().join("score.json"));
    assert_eq!(r["details"]["global"], 0.0);
    assert!(d.path().join("violations.csv").exists());

    let o = run("export", &s, d.path(), &["--set", "mechanism.eta_star=2"]);
    assert_eq!(o.status.code(), Some(0));
    let curve = fs::read_to_string(d.path().join("threshold_curve.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("lambda,kappa_star,d1,d2"));
    assert_eq!(
        curve.lines().count(),
        1 + equiscreen::construct::CURVE_SAMPLES
    );
    assert!(d.path().join("field.csv").exists());
}
