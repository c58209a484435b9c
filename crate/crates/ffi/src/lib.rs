//! C ABI over `shiftlab`.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free`. Every entry point returns a [`ShlStatus`]; on failure
//! [`shl_last_error`] describes the cause for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use shiftlab::counting::{count, CountSpec, Method, DEFAULT_COUNT_BUDGET};
use shiftlab::density::{density, DensityOptions};
use shiftlab::exact::parse_rational;
use shiftlab::forms::{check_hypotheses, taylor_shift, FormSystem, ShiftExpansion};
use shiftlab::shift::Shift;
use shiftlab::Error;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShlStatus {
    Ok = 0,
    NullPointer = 1,
    Utf8 = 2,
    Parse = 3,
    Invalid = 4,
    Budget = 5,
    Numeric = 6,
    Io = 7,
    Panic = 8,
}

/// A parsed form system with its shift expansion.
pub struct ShlSystem {
    system: FormSystem,
    expansion: ShiftExpansion,
}

/// Output of [`shl_count`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ShlCount {
    pub count: u64,
    /// Points whose membership could not be decided at working precision.
    pub boundary_flags: u64,
    /// 0 generic, 1 meet-in-the-middle.
    pub method: u32,
}

/// Output of [`shl_density`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ShlDensity {
    pub c: f64,
    pub std_error: f64,
    pub converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ShlStatus {
    match e {
        Error::Parse { .. } => ShlStatus::Parse,
        Error::Budget(_) | Error::SearchCap(_) => ShlStatus::Budget,
        Error::Undecidable(_) | Error::NonConverged { .. } | Error::Degenerate(_) => ShlStatus::Numeric,
        Error::Io(_) => ShlStatus::Io,
        _ => ShlStatus::Invalid,
    }
}

struct Fail(ShlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ShlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ShlStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            ShlStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(ShlStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(ShlStatus::Utf8, format!("{name} is not valid UTF-8")))
}

unsafe fn sys_arg<'a>(p: *const ShlSystem) -> Result<&'a ShlSystem, Fail> {
    p.as_ref().ok_or_else(|| Fail(ShlStatus::NullPointer, "system is null".into()))
}

fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    unsafe { p.as_mut() }.ok_or_else(|| Fail(ShlStatus::NullPointer, format!("{name} is null")))
}

fn give_string(s: String, out: *mut *mut c_char) -> Result<(), Fail> {
    let out = out_arg(out, "out")?;
    *out = CString::new(s).map_err(|_| Fail(ShlStatus::Invalid, "interior nul".into()))?.into_raw();
    Ok(())
}

/// Message for the last failure on this thread, or null. Valid until the next
/// call into this library from the same thread.
#[no_mangle]
pub extern "C" fn shl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn shl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a system document `{n, d, forms, sigma}`.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_system_from_json(json: *const c_char, out: *mut *mut ShlSystem) -> ShlStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let system = FormSystem::from_json(text)?;
        let expansion = taylor_shift(&system);
        *out = Box::into_raw(Box::new(ShlSystem { system, expansion }));
        Ok(())
    })
}

/// Releases a system. Null is ignored.
///
/// # Safety
/// `sys` must come from [`shl_system_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shl_system_free(sys: *mut ShlSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of variables, degree and number of forms.
///
/// # Safety
/// `sys` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_system_dims(sys: *const ShlSystem, n: *mut u64, d: *mut u32, r: *mut u64) -> ShlStatus {
    guard(|| {
        let s = sys_arg(sys)?;
        *out_arg(n, "n")? = s.system.n() as u64;
        *out_arg(d, "d")? = s.system.d();
        *out_arg(r, "r")? = s.system.r() as u64;
        Ok(())
    })
}

/// Hypothesis report as JSON; free with [`shl_string_free`]. `passed` is set
/// when every condition holds.
///
/// # Safety
/// `sys` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_hypotheses_json(
    sys: *const ShlSystem,
    seed: u64,
    passed: *mut bool,
    out: *mut *mut c_char,
) -> ShlStatus {
    guard(|| {
        let s = sys_arg(sys)?;
        let report = check_hypotheses(&s.system, seed);
        *out_arg(passed, "passed")? = report.passed();
        let json = serde_json::to_string(&report).map_err(|e| Fail(ShlStatus::Io, e.to_string()))?;
        give_string(json, out)
    })
}

/// Counts `x` in `[-P, P]^n` with `|f_k(x + mu) - tau_k| < eta` for every `k`.
///
/// `mu_kind` is `rational`, `quadratic` or `decimal`; `tau` holds `r` rational
/// literals; `method` is `generic`, `mitm` or `auto` (null means auto);
/// `budget` 0 selects the default point budget.
///
/// # Safety
/// String arguments must be nul-terminated; `tau` must hold `tau_len` of them.
#[no_mangle]
pub unsafe extern "C" fn shl_count(
    sys: *const ShlSystem,
    mu_kind: *const c_char,
    mu_literal: *const c_char,
    tau: *const *const c_char,
    tau_len: usize,
    eta: *const c_char,
    p: u64,
    method: *const c_char,
    budget: u64,
    out: *mut ShlCount,
) -> ShlStatus {
    guard(|| {
        let s = sys_arg(sys)?;
        let mu = Shift::parse(str_arg(mu_kind, "mu_kind")?, str_arg(mu_literal, "mu_literal")?)?;
        if tau.is_null() && tau_len > 0 {
            return Err(Fail(ShlStatus::NullPointer, "tau is null".into()));
        }
        let mut taus = Vec::with_capacity(tau_len);
        for k in 0..tau_len {
            taus.push(parse_rational(str_arg(*tau.add(k), "tau[k]")?)?);
        }
        let eta = parse_rational(str_arg(eta, "eta")?)?;
        let method = if method.is_null() { Method::Auto } else { Method::parse(str_arg(method, "method")?)? };
        let out = out_arg(out, "out")?;
        let spec = CountSpec {
            system: &s.system,
            expansion: &s.expansion,
            mu: &mu,
            tau: taus,
            eta,
            p,
            method,
        };
        let budget = if budget == 0 { DEFAULT_COUNT_BUDGET } else { budget };
        let res = count(&spec, budget)?;
        *out = ShlCount {
            count: res.count,
            boundary_flags: res.boundary_flags,
            method: match res.method {
                Method::Mitm => 1,
                _ => 0,
            },
        };
        Ok(())
    })
}

/// Real density of the unshifted system by randomized quasi-Monte Carlo.
/// `samples_per_shift` 0 selects the default.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shl_density(
    sys: *const ShlSystem,
    seed: u64,
    samples_per_shift: u64,
    out: *mut ShlDensity,
) -> ShlStatus {
    guard(|| {
        let s = sys_arg(sys)?;
        let out = out_arg(out, "out")?;
        let mut opts = DensityOptions { seed, ..Default::default() };
        if samples_per_shift > 0 {
            opts.samples_per_shift = samples_per_shift as usize;
            opts.max_samples_per_shift = opts.max_samples_per_shift.max(opts.samples_per_shift);
        }
        let est = density(&s.system, &opts)?;
        *out = ShlDensity { c: est.c, std_error: est.std_error, converged: est.converged };
        Ok(())
    })
}
