use equiscreen_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    let mut need = 0usize;
    unsafe {
        assert_eq!(
            es_last_error(ptr::null_mut(), 0, &mut need),
            EsStatus::BufferTooSmall
        );
        let mut buf = vec![0 as c_char; need];
        assert_eq!(
            es_last_error(buf.as_mut_ptr(), buf.len(), ptr::null_mut()),
            EsStatus::Ok
        );
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn parse(text: &str, overrides: &[&str]) -> Result<*mut EsScenario, EsStatus> {
    let text = CString::new(text).unwrap();
    let ov: Vec<CString> = overrides
        .iter()
        .map(|o| CString::new(*o).unwrap())
        .collect();
    let ptrs: Vec<*const c_char> = ov.iter().map(|c| c.as_ptr()).collect();
    let mut out = ptr::null_mut();
    let st = unsafe { es_scenario_parse(text.as_ptr(), ptrs.as_ptr(), ptrs.len(), &mut out) };
    if st == EsStatus::Ok {
        Ok(out)
    } else {
        Err(st)
    }
}

#[test]
fn threshold_bundles_through_handles() {
    let s = parse(
        equiscreen::io::S1,
        &["mechanism.kind=threshold", "mechanism.eta_star=2"],
    )
    .unwrap();
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(es_mechanism_build(s, &mut m), EsStatus::Ok);
        let (mut x, mut p, mut q) = (f64::NAN, f64::NAN, f64::NAN);
        assert_eq!(
            es_mechanism_bundle(m, 0.8, 1.8, &mut x, &mut p, &mut q),
            EsStatus::Ok
        );
        assert_eq!(x, 1.0);
        assert!(q >= 0.0 && p.is_finite());
        assert_eq!(
            es_mechanism_bundle(m, 0.2, 1.2, &mut x, &mut p, &mut q),
            EsStatus::Ok
        );
        assert_eq!(x, 0.0);
        es_mechanism_free(m);
        es_scenario_free(s);
    }
}

#[test]
fn verify_returns_the_cli_report() {
    let s = parse(
        equiscreen::io::S1,
        &[
            "grid.n_alpha=11",
            "grid.n_beta=11",
            "tolerances.convexity_trials=2000",
        ],
    )
    .unwrap();
    let mut json = ptr::null_mut();
    let mut pass = -1;
    unsafe {
        assert_eq!(es_verify(s, 42, &mut json, &mut pass), EsStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        es_string_free(json);
        es_scenario_free(s);
        assert_eq!(pass, 1);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["command"], "verify");
        assert_eq!(v["seed"], 42);
    }
}

#[test]
fn errors_map_to_status_codes() {
    assert_eq!(
        parse("[domain]\nalpha = 0 1\nbeta = oops\n", &[]).unwrap_err(),
        EsStatus::Parse
    );
    assert!(last_error().contains("line 3"), "{}", last_error());

    let s = parse(
        equiscreen::io::S1,
        &["mechanism.kind=threshold", "mechanism.eta_star=9"],
    )
    .unwrap();
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(es_mechanism_build(s, &mut m), EsStatus::Construction);
        assert!(m.is_null());
        assert_eq!(
            es_mechanism_build(ptr::null(), &mut m),
            EsStatus::NullArgument
        );
        es_scenario_free(s);
        es_scenario_free(ptr::null_mut());
        es_string_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
}

#[test]
fn version_and_angle() {
    let v = unsafe { CStr::from_ptr(es_version()) };
    assert_eq!(v.to_str().unwrap(), equiscreen::VERSION);
    assert!((es_angle(1.0) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    assert_eq!(es_angle(f64::INFINITY), std::f64::consts::FRAC_PI_2);
}

/// Compiles `tests/c/smoke.c` against the generated header and the static library.
#[test]
fn c_program_links_against_the_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = lib_dir.join("libequiscreen_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(
        run.status.success(),
        "exit {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
