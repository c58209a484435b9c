use std::ffi::{CStr, CString};
use std::ptr;

use shiftlab_ffi::*;

const QUAD: &str = r#"{"n": 1, "d": 2, "forms": [[{"coeff": "1", "exps": [2]}]]}"#;

fn system(json: &str) -> *mut ShlSystem {
    let json = CString::new(json).unwrap();
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { shl_system_from_json(json.as_ptr(), &mut sys) }, ShlStatus::Ok);
    sys
}

fn last_error() -> String {
    let p = shl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn count_matches_hand_example() {
    let sys = system(QUAD);
    let (kind, lit) = (CString::new("rational").unwrap(), CString::new("1/2").unwrap());
    let tau = [CString::new("9/4").unwrap()];
    let taus: Vec<_> = tau.iter().map(|t| t.as_ptr()).collect();
    let eta = CString::new("1/10").unwrap();
    let mut out = ShlCount::default();
    let st = unsafe {
        shl_count(sys, kind.as_ptr(), lit.as_ptr(), taus.as_ptr(), 1, eta.as_ptr(), 3, ptr::null(), 0, &mut out)
    };
    assert_eq!(st, ShlStatus::Ok);
    assert_eq!(out.count, 2);
    assert_eq!(out.boundary_flags, 0);
    unsafe { shl_system_free(sys) };
}

#[test]
fn dims_and_hypotheses() {
    let sys = system(QUAD);
    let (mut n, mut d, mut r) = (0, 0, 0);
    assert_eq!(unsafe { shl_system_dims(sys, &mut n, &mut d, &mut r) }, ShlStatus::Ok);
    assert_eq!((n, d, r), (1, 2, 1));
    let mut passed = true;
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { shl_hypotheses_json(sys, 1, &mut passed, &mut json) }, ShlStatus::Ok);
    assert!(!passed);
    let v: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(v["numvars_ok"], false);
    unsafe {
        shl_string_free(json);
        shl_system_free(sys);
    }
}

#[test]
fn errors_are_reported() {
    let bad = CString::new(r#"{"n": 1, "d": 2, "forms": [[{"coeff": "x", "exps": [2]}]]}"#).unwrap();
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { shl_system_from_json(bad.as_ptr(), &mut sys) }, ShlStatus::Parse);
    assert!(sys.is_null());
    assert!(last_error().contains("coeff"));

    assert_eq!(unsafe { shl_system_from_json(ptr::null(), &mut sys) }, ShlStatus::NullPointer);
    let mut out = ShlCount::default();
    let st = unsafe {
        shl_count(ptr::null(), ptr::null(), ptr::null(), ptr::null(), 0, ptr::null(), 1, ptr::null(), 0, &mut out)
    };
    assert_eq!(st, ShlStatus::NullPointer);

    let sys = system(QUAD);
    let (kind, lit) = (CString::new("cubic").unwrap(), CString::new("1").unwrap());
    let eta = CString::new("1").unwrap();
    let st = unsafe {
        shl_count(sys, kind.as_ptr(), lit.as_ptr(), ptr::null(), 0, eta.as_ptr(), 1, ptr::null(), 0, &mut out)
    };
    assert_eq!(st, ShlStatus::Parse);
    assert!(last_error().contains("mu.kind"));
    unsafe { shl_system_free(sys) };
}

#[test]
fn density_of_a_sum_of_squares() {
    // the disc {x^2 + y^2 < u} has area pi u, so I_L = pi/2
    let sys = system(r#"{"n": 2, "d": 2, "forms": [[{"coeff": "1", "exps": [2, 0]}, {"coeff": "1", "exps": [0, 2]}]]}"#);
    let mut out = ShlDensity::default();
    assert_eq!(unsafe { shl_density(sys, 3, 1 << 14, &mut out) }, ShlStatus::Ok);
    assert!((out.c - std::f64::consts::FRAC_PI_2).abs() < 0.05, "{}", out.c);
    unsafe { shl_system_free(sys) };
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/shiftlab.h")).unwrap();
    for name in ["shl_system_from_json", "shl_count", "shl_density", "shl_last_error", "SHL_STATUS_OK", "ShlSystem"] {
        assert!(h.contains(name), "{name}");
    }
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(shl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
