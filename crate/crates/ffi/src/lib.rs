//! C ABI over `kppfront`.
//!
//! Objects are opaque handles created by `kpp_*_new`/`kpp_*_compute` functions
//! and released with the matching `kpp_*_free`. Every fallible call returns a
//! `KppStatus`; on failure `kpp_last_error()` describes the error on the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use kppfront::cli::{run, RunConfig};
use kppfront::eigen::{window_h, Engine, WindowOptions};
use kppfront::pde::{simulate, InitialDatum, SolverConfig};
use kppfront::speed::{
    default_w_grid, empirical_speeds, hamiltonian_table, spreading_speed, EmpiricalOptions, HamiltonianTable, TablePolicy,
};
use kppfront::{Error, Medium, MediumSpec};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KppStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InvalidMedium = 4,
    InvalidParameter = 5,
    Numerical = 6,
    Io = 7,
    OutOfRange = 8,
    Panic = 9,
}

/// A medium: diffusion, drift and reaction coefficients.
pub struct KppMedium {
    inner: Medium,
}

/// Hamiltonian table sampled on a momentum grid.
pub struct KppTable {
    inner: HamiltonianTable,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> KppStatus {
    match e {
        Error::Config(_) | Error::Json(_) => KppStatus::Config,
        Error::InvalidMedium(_) => KppStatus::InvalidMedium,
        Error::InvalidParameter(_) => KppStatus::InvalidParameter,
        Error::Io(_) => KppStatus::Io,
        _ => KppStatus::Numerical,
    }
}

struct Fail(KppStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> KppStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            KppStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            KppStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(KppStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(KppStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(KppStatus::NullPointer, format!("{what} is null")))
}

fn out<T>(p: *mut T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(KppStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn parse_engine(json: &str) -> Result<Engine, Fail> {
    serde_json::from_str(json).map_err(|e| Fail(KppStatus::Config, format!("engine: {e}")))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn kpp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; empty after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn kpp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Build a medium from its JSON description (the `medium` section of a run config).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_medium` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpp_medium_from_json(json: *const c_char, out_medium: *mut *mut KppMedium) -> KppStatus {
    guard(|| {
        out(out_medium, "out_medium")?;
        let text = str_arg(json, "json")?;
        let spec: MediumSpec = serde_json::from_str(text).map_err(|e| Fail(KppStatus::Config, format!("medium: {e}")))?;
        let inner = spec.build()?;
        *out_medium = Box::into_raw(Box::new(KppMedium { inner }));
        Ok(())
    })
}

/// Constant coefficients `a0 > 0`, `q0`, `c0 > 0`.
///
/// # Safety
/// `out_medium` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpp_medium_homogeneous(a0: f64, q0: f64, c0: f64, out_medium: *mut *mut KppMedium) -> KppStatus {
    guard(|| {
        out(out_medium, "out_medium")?;
        let inner = Medium::homogeneous(a0, q0, c0)?;
        *out_medium = Box::into_raw(Box::new(KppMedium { inner }));
        Ok(())
    })
}

/// # Safety
/// `medium` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn kpp_medium_free(medium: *mut KppMedium) {
    if !medium.is_null() {
        drop(Box::from_raw(medium));
    }
}

/// Diffusion, drift and linear growth rate at `x`.
///
/// # Safety
/// Pointers must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpp_medium_coefficients(
    medium: *const KppMedium,
    x: f64,
    a: *mut f64,
    q: *mut f64,
    c: *mut f64,
) -> KppStatus {
    guard(|| {
        let m = &obj(medium, "medium")?.inner;
        out(a, "a")?;
        out(q, "q")?;
        out(c, "c")?;
        *a = m.a.value(x);
        *q = m.q.value(x);
        *c = m.c().value(x);
        Ok(())
    })
}

/// Lower and upper Hamiltonian at momentum `p` with the engine described by
/// `engine_json` (e.g. `{"kind": "periodic"}`) and default windows.
///
/// # Safety
/// Pointers must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpp_hamiltonian(
    medium: *const KppMedium,
    engine_json: *const c_char,
    p: f64,
    h_under: *mut f64,
    h_over: *mut f64,
) -> KppStatus {
    guard(|| {
        let m = &obj(medium, "medium")?.inner;
        let engine = parse_engine(str_arg(engine_json, "engine_json")?)?;
        out(h_under, "h_under")?;
        out(h_over, "h_over")?;
        let h = window_h(m, p, &engine, &WindowOptions::default())?;
        *h_under = h.h_under;
        *h_over = h.h_over;
        Ok(())
    })
}

/// Hamiltonian table on `p_min, p_min + p_step, ..., p_max`, refined near the speed minimizers.
///
/// # Safety
/// Pointers must be valid; `out_table` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpp_table_compute(
    medium: *const KppMedium,
    engine_json: *const c_char,
    p_min: f64,
    p_max: f64,
    p_step: f64,
    out_table: *mut *mut KppTable,
) -> KppStatus {
    guard(|| {
        let m = &obj(medium, "medium")?.inner;
        let engine = parse_engine(str_arg(engine_json, "engine_json")?)?;
        out(out_table, "out_table")?;
        if !(p_step > 0.0 && p_min < p_max) {
            return Err(Fail(KppStatus::InvalidParameter, "need p_min < p_max and p_step > 0".into()));
        }
        let n = ((p_max - p_min) / p_step).round() as usize;
        let policy = TablePolicy {
            p_grid: (0..=n).map(|k| p_min + k as f64 * p_step).collect(),
            ..TablePolicy::default()
        };
        let inner = hamiltonian_table(m, &engine, &policy)?;
        *out_table = Box::into_raw(Box::new(KppTable { inner }));
        Ok(())
    })
}

/// Number of rows; 0 for a null table.
///
/// # Safety
/// `table` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn kpp_table_len(table: *const KppTable) -> usize {
    table.as_ref().map_or(0, |t| t.inner.len())
}

/// # Safety
/// Pointers must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpp_table_row(
    table: *const KppTable,
    index: usize,
    p: *mut f64,
    h_under: *mut f64,
    h_over: *mut f64,
) -> KppStatus {
    guard(|| {
        let t = &obj(table, "table")?.inner;
        out(p, "p")?;
        out(h_under, "h_under")?;
        out(h_over, "h_over")?;
        if index >= t.len() {
            return Err(Fail(KppStatus::OutOfRange, format!("row {index} of {}", t.len())));
        }
        *p = t.p_grid[index];
        *h_under = t.h_under[index];
        *h_over = t.h_over[index];
        Ok(())
    })
}

/// Lower and upper spreading speeds `min_{p>0} H(-p)/p` from the table.
///
/// # Safety
/// Pointers must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpp_table_speed(table: *const KppTable, w_under: *mut f64, w_over: *mut f64) -> KppStatus {
    guard(|| {
        let t = &obj(table, "table")?.inner;
        out(w_under, "w_under")?;
        out(w_over, "w_over")?;
        let s = spreading_speed(t)?;
        *w_under = s.w_under;
        *w_over = s.w_over;
        Ok(())
    })
}

/// # Safety
/// `table` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn kpp_table_free(table: *mut KppTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Simulate from the default datum up to `t_final` and measure the empirical
/// speeds over `[t_final / 2, t_final]`. A speed that is not attained is NaN.
///
/// # Safety
/// Pointers must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpp_empirical_speed(
    medium: *const KppMedium,
    t_final: f64,
    dx: f64,
    dt: f64,
    w_star: *mut f64,
    w_upper: *mut f64,
) -> KppStatus {
    guard(|| {
        let m = &obj(medium, "medium")?.inner;
        out(w_star, "w_star")?;
        out(w_upper, "w_upper")?;
        let opts = EmpiricalOptions::default();
        let t0 = opts.window_start * t_final;
        let cfg = SolverConfig {
            dx,
            dt,
            snapshot_times: (0..=50).map(|k| t0 + (t_final - t0) * k as f64 / 50.0).collect(),
            ..SolverConfig::default()
        };
        let tr = simulate(m, &InitialDatum::default(), t_final, &cfg, &[0.5])?;
        let drift = m.q.sampled_sup().abs().max(m.q.sampled_inf().abs());
        let w_max = 2.0 * (m.a.sampled_sup() * m.c().sampled_sup()).sqrt() + drift + 1.0;
        let e = empirical_speeds(&tr, &default_w_grid(w_max), &opts)?;
        *w_star = e.w_star_emp.unwrap_or(f64::NAN);
        *w_upper = e.w_upper_emp.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Run the full pipeline for a JSON run config, writing outputs under `out_dir`.
/// `exit_code` receives the command-line exit status: 0 pass, 1 verdict
/// failure, 2 config error, 3 numerical failure. The status is `Ok` whenever
/// the pipeline ran, including verdict failures.
///
/// # Safety
/// Strings must be NUL-terminated; `exit_code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpp_run_config(config_json: *const c_char, out_dir: *const c_char, exit_code: *mut c_int) -> KppStatus {
    guard(|| {
        out(exit_code, "exit_code")?;
        let cfg = RunConfig::from_json_str(str_arg(config_json, "config_json")?)?;
        let dir = str_arg(out_dir, "out_dir")?;
        let o = run(&cfg, Path::new(dir));
        *exit_code = o.exit_code;
        match o.error {
            Some(msg) if o.exit_code >= 2 => {
                let s = if o.exit_code == 2 { KppStatus::Config } else { KppStatus::Numerical };
                Err(Fail(s, msg))
            }
            _ => Ok(()),
        }
    })
}
