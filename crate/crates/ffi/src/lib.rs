//! C ABI over `rotlayer`: opaque handles, integer status codes and a
//! thread-local last-error message.
//!
//! Every function returns an [`RlStatus`]; outputs go through pointer
//! arguments. Handles are released with their `_free` function and strings
//! returned by the library with [`rl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rotlayer::batchelor_wood::{compute_tilde_omega, Params};
use rotlayer::cli::{self, RunArtifacts, RunConfig};
use rotlayer::error_solver::hardy_check;
use rotlayer::Error;

/// Status codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InvalidParam = 4,
    InvalidRegime = 5,
    NonConvergence = 6,
    Singular = 7,
    Precondition = 8,
    Solver = 9,
    Io = 10,
    OutOfRange = 11,
    Panic = 12,
}

/// Opaque run configuration.
pub struct RlConfig(RunConfig);

/// Opaque result of a pipeline run.
pub struct RlRun(RunArtifacts);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RlStatus {
    match e {
        Error::Config(_) => RlStatus::Config,
        Error::InvalidParam(_) => RlStatus::InvalidParam,
        Error::InvalidRegime(_) => RlStatus::InvalidRegime,
        Error::NonConvergence { .. } => RlStatus::NonConvergence,
        Error::Singular { .. } => RlStatus::Singular,
        Error::Precondition(_) => RlStatus::Precondition,
        Error::Io(_) => RlStatus::Io,
        _ => RlStatus::Solver,
    }
}

fn guard(f: impl FnOnce() -> Result<(), RlStatus>) -> RlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside rotlayer");
            RlStatus::Panic
        }
    }
}

fn fail(e: Error) -> RlStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> RlStatus {
    set_error(&format!("null pointer: {what}"));
    RlStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, RlStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        RlStatus::InvalidUtf8
    })
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], RlStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn out_string(s: String, out: *mut *mut c_char) -> Result<(), RlStatus> {
    let c = CString::new(s).map_err(|_| fail(Error::Io("interior NUL in output".into())))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Owned by the
/// library; valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_config_default(out: *mut *mut RlConfig) -> RlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(RlConfig(RunConfig::default())));
        Ok(())
    })
}

/// Parses a JSON configuration; missing keys take their defaults.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_config_from_json(json: *const c_char, out: *mut *mut RlConfig) -> RlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(json, "json")?;
        let cfg = RunConfig::from_json(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(RlConfig(cfg)));
        Ok(())
    })
}

/// Serializes a configuration to JSON.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_config_to_json(cfg: *const RlConfig, out: *mut *mut c_char) -> RlStatus {
    guard(|| {
        if cfg.is_null() || out.is_null() {
            return Err(null("cfg/out"));
        }
        out_string(cli::to_json_17(&(*cfg).0).map_err(fail)?, out)
    })
}

/// # Safety
/// `cfg` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rl_config_free(cfg: *mut RlConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the configured pipeline.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_run(cfg: *const RlConfig, out: *mut *mut RlRun) -> RlStatus {
    guard(|| {
        if cfg.is_null() || out.is_null() {
            return Err(null("cfg/out"));
        }
        let a = cli::run(&(*cfg).0).map_err(fail)?;
        *out = Box::into_raw(Box::new(RlRun(a)));
        Ok(())
    })
}

/// # Safety
/// `run` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rl_run_free(run: *mut RlRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Full report as JSON (17 significant digits).
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_run_report_json(run: *const RlRun, out: *mut *mut c_char) -> RlStatus {
    guard(|| {
        if run.is_null() || out.is_null() {
            return Err(null("run/out"));
        }
        out_string(cli::to_json_17(&(*run).0.report).map_err(fail)?, out)
    })
}

/// Process-style exit code of the run: 0 pass, 2 gate failure, 3 nonconvergence.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_run_exit_code(run: *const RlRun, out: *mut i32) -> RlStatus {
    guard(|| {
        if run.is_null() || out.is_null() {
            return Err(null("run/out"));
        }
        let a = &(*run).0;
        *out = if !a.report.converged() {
            3
        } else if !a.report.passed() {
            2
        } else {
            0
        };
        Ok(())
    })
}

/// Limiting circulation of the run.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_run_tilde_omega(run: *const RlRun, out: *mut f64) -> RlStatus {
    guard(|| {
        if run.is_null() || out.is_null() {
            return Err(null("run/out"));
        }
        *out = (*run).0.report.tilde_omega;
        Ok(())
    })
}

/// Number of output fields held by the run.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_run_field_count(run: *const RlRun, out: *mut usize) -> RlStatus {
    guard(|| {
        if run.is_null() || out.is_null() {
            return Err(null("run/out"));
        }
        let run = &*run;
        *out = run.0.fields.len();
        Ok(())
    })
}

/// Name of field `index` (free with [`rl_string_free`]).
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_run_field_name(run: *const RlRun, index: usize, out: *mut *mut c_char) -> RlStatus {
    guard(|| {
        if run.is_null() || out.is_null() {
            return Err(null("run/out"));
        }
        let run = &*run;
        let f = run.0.fields.get(index).ok_or_else(|| out_of_range(index))?;
        out_string(f.0.clone(), out)
    })
}

fn out_of_range(index: usize) -> RlStatus {
    set_error(&format!("index {index} out of range"));
    RlStatus::OutOfRange
}

/// Radial node count of field `index`.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_run_field_len(run: *const RlRun, index: usize, out: *mut usize) -> RlStatus {
    guard(|| {
        if run.is_null() || out.is_null() {
            return Err(null("run/out"));
        }
        let run = &*run;
        let f = run.0.fields.get(index).ok_or_else(|| out_of_range(index))?;
        *out = f.1.n();
        Ok(())
    })
}

/// Samples field `index` at radial node `node` and angle `theta`, returning
/// the node coordinate and value.
///
/// # Safety
/// `run` must be a live handle; `coord` and `value` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rl_run_field_eval(
    run: *const RlRun,
    index: usize,
    node: usize,
    theta: f64,
    coord: *mut f64,
    value: *mut f64,
) -> RlStatus {
    guard(|| {
        if run.is_null() || coord.is_null() || value.is_null() {
            return Err(null("run/coord/value"));
        }
        let run = &*run;
        let f = &run.0.fields.get(index).ok_or_else(|| out_of_range(index))?.1;
        if node >= f.n() {
            return Err(out_of_range(node));
        }
        *coord = f.nodes()[node];
        *value = f.eval(node, theta);
        Ok(())
    })
}

/// Writes `report.json`, `history.csv`, `timing.json` and `fields/*.csv` under `dir`.
///
/// # Safety
/// `run` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn rl_run_write(run: *const RlRun, dir: *const c_char, with_fields: bool) -> RlStatus {
    guard(|| {
        if run.is_null() {
            return Err(null("run"));
        }
        let d = str_arg(dir, "dir")?;
        cli::write_artifacts(&(*run).0, std::path::Path::new(d), with_fields).map_err(fail)
    })
}

/// `ω̃` for boundary rotation `ω + δ f(θ)` with
/// `f = f_cos[0] + Σ_k (f_cos[k] cos kθ + f_sin[k] sin kθ)`; `f_sin[0]` must be 0.
///
/// # Safety
/// Arrays must hold the given number of doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rl_tilde_omega(
    omega: f64,
    delta: f64,
    f_cos: *const f64,
    n_cos: usize,
    f_sin: *const f64,
    n_sin: usize,
    out: *mut f64,
) -> RlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let fc = slice_arg(f_cos, n_cos, "f_cos")?.to_vec();
        let fs = slice_arg(f_sin, n_sin, "f_sin")?.to_vec();
        let p = Params::new(omega, delta, 0.1, fc, fs, 0).map_err(fail)?;
        *out = compute_tilde_omega(&p).map_err(fail)?.tilde_omega;
        Ok(())
    })
}

/// One-dimensional Hardy check on samples starting at `s = 0`. With
/// `weighted` false the `s^{-2}` form is used and `alpha` ignored.
///
/// # Safety
/// `s` and `f` must hold `n` doubles; `ratio` and `passed` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rl_hardy_check(
    s: *const f64,
    f: *const f64,
    n: usize,
    weighted: bool,
    alpha: f64,
    ratio: *mut f64,
    passed: *mut bool,
) -> RlStatus {
    guard(|| {
        if ratio.is_null() || passed.is_null() {
            return Err(null("ratio/passed"));
        }
        let s = slice_arg(s, n, "s")?;
        let f = slice_arg(f, n, "f")?;
        let h = hardy_check(s, f, weighted.then_some(alpha)).map_err(fail)?;
        *ratio = h.ratio;
        *passed = h.passed;
        Ok(())
    })
}
