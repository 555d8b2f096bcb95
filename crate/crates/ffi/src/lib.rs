//! C ABI over the equiscreen core.
//!
//! Scenarios and mechanisms cross the boundary as opaque handles. Every call
//! returns an `EsStatus`; on failure the message is kept per thread and read
//! back with `es_last_error`. Strings handed out by the library are released
//! with `es_string_free`.

use equiscreen::construct::{build_from_scenario, Mechanism};
use equiscreen::fairness::angle;
use equiscreen::io::parse_scenario;
use equiscreen::model::Scenario;
use equiscreen::{Error, Point};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidScenario = 4,
    Construction = 5,
    NotApplicable = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Parsed scenario.
pub struct EsScenario(Scenario);

/// Mechanism built from a scenario.
pub struct EsMechanism(Mechanism);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> EsStatus {
    match e {
        Error::Parse { .. } => EsStatus::Parse,
        Error::MalformedScenario(_) | Error::InvalidGrid(_) => EsStatus::InvalidScenario,
        Error::NotApplicable(_) => EsStatus::NotApplicable,
        _ => EsStatus::Construction,
    }
}

fn guard(f: impl FnOnce() -> Result<(), EsStatus>) -> EsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            EsStatus::Panic
        }
    }
}

fn fail(e: Error) -> EsStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, EsStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(EsStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        EsStatus::InvalidUtf8
    })
}

fn null() -> EsStatus {
    set_error("null pointer argument");
    EsStatus::NullArgument
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn es_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated).
/// `*needed` receives the required size including the terminator.
///
/// # Safety
/// `buf` must be writable for `len` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn es_last_error(
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> EsStatus {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map(|c| c.as_bytes_with_nul()).unwrap_or(b"\0");
        if !needed.is_null() {
            *needed = bytes.len();
        }
        if buf.is_null() || len < bytes.len() {
            return EsStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, bytes.len());
        EsStatus::Ok
    })
}

/// Parses scenario text. `overrides` is an array of `n_overrides`
/// `section.key=value` strings and may be null when `n_overrides` is 0.
///
/// # Safety
/// All pointers must be valid; `out` receives a handle owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn es_scenario_parse(
    text_ptr: *const c_char,
    overrides: *const *const c_char,
    n_overrides: usize,
    out: *mut *mut EsScenario,
) -> EsStatus {
    guard(|| {
        if out.is_null() || (overrides.is_null() && n_overrides > 0) {
            return Err(null());
        }
        let src = text(text_ptr)?;
        let mut ov = Vec::with_capacity(n_overrides);
        for i in 0..n_overrides {
            ov.push(text(*overrides.add(i))?.to_string());
        }
        let s = parse_scenario(src, &ov).map_err(fail)?;
        *out = Box::into_raw(Box::new(EsScenario(s)));
        Ok(())
    })
}

/// # Safety
/// `s` must come from `es_scenario_parse` and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn es_scenario_free(s: *mut EsScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Builds the mechanism the scenario configures.
///
/// # Safety
/// `s` must be a live scenario handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn es_mechanism_build(
    s: *const EsScenario,
    out: *mut *mut EsMechanism,
) -> EsStatus {
    guard(|| {
        if s.is_null() || out.is_null() {
            return Err(null());
        }
        let m = build_from_scenario(&(*s).0).map_err(fail)?;
        *out = Box::into_raw(Box::new(EsMechanism(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from `es_mechanism_build` and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn es_mechanism_free(m: *mut EsMechanism) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Bundle `(x, p, q)` assigned to type `(alpha, beta)`.
///
/// # Safety
/// `m` must be a live mechanism handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_mechanism_bundle(
    m: *const EsMechanism,
    alpha: f64,
    beta: f64,
    x: *mut f64,
    p: *mut f64,
    q: *mut f64,
) -> EsStatus {
    guard(|| {
        if m.is_null() || x.is_null() || p.is_null() || q.is_null() {
            return Err(null());
        }
        let b = (*m).0.bundle(Point::new(alpha, beta));
        *x = b.x;
        *p = b.p;
        *q = b.q;
        Ok(())
    })
}

/// Runs the verification suite and returns the JSON report in `*json`
/// (release with `es_string_free`); `*pass` receives 1 if every check passed.
///
/// # Safety
/// `s` must be a live scenario handle; `json` and `pass` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_verify(
    s: *const EsScenario,
    seed: u64,
    json: *mut *mut c_char,
    pass: *mut i32,
) -> EsStatus {
    guard(|| {
        if s.is_null() || json.is_null() || pass.is_null() {
            return Err(null());
        }
        let r = equiscreen::cli::verify_report(&(*s).0, seed).map_err(fail)?;
        *pass = i32::from(r.pass);
        *json = CString::new(r.to_json())
            .map_err(|_| fail(Error::Io("report contains NUL".into())))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `p` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn es_string_free(p: *mut c_char) {
    if !p.is_null() {
        drop(CString::from_raw(p));
    }
}

/// Angle in `[0, pi)` of a line with slope `m`; infinite slopes give `pi/2`.
#[no_mangle]
pub extern "C" fn es_angle(m: f64) -> f64 {
    angle(m)
}
