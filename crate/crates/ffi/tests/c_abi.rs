use std::ffi::{CStr, CString};
use std::ptr;

use dqip_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(dqip_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn bell_pair_through_handles() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(dqip_state_new(2, &mut s), DqipStatus::Ok);
        let h = CString::new("h").unwrap();
        let cnot = CString::new("cnot").unwrap();
        assert_eq!(dqip_state_apply(s, h.as_ptr(), [0usize].as_ptr(), 1), DqipStatus::Ok);
        assert_eq!(dqip_state_apply(s, cnot.as_ptr(), [0usize, 1].as_ptr(), 2), DqipStatus::Ok);
        let mut p = 0.0;
        assert_eq!(dqip_state_prob_one(s, 1, &mut p), DqipStatus::Ok);
        assert!((p - 0.5).abs() < 1e-12);
        let mut zero = ptr::null_mut();
        assert_eq!(dqip_state_new(2, &mut zero), DqipStatus::Ok);
        let mut f = 0.0;
        assert_eq!(dqip_state_fidelity(s, zero, &mut f), DqipStatus::Ok);
        assert!((f - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        dqip_state_free(s);
        dqip_state_free(zero);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(dqip_state_new(0, &mut s), DqipStatus::Capacity);
        assert_eq!(dqip_state_new(1, ptr::null_mut()), DqipStatus::NullPointer);
        assert!(last_error().contains("out"));
        assert_eq!(dqip_state_new(1, &mut s), DqipStatus::Ok);
        let bogus = CString::new("toffoli").unwrap();
        assert_eq!(dqip_state_apply(s, bogus.as_ptr(), [0usize].as_ptr(), 1), DqipStatus::Validation);
        assert!(last_error().contains("toffoli"));
        let x = CString::new("x").unwrap();
        assert_eq!(dqip_state_apply(s, x.as_ptr(), [3usize].as_ptr(), 1), DqipStatus::Layout);
        dqip_state_free(s);
        dqip_state_free(ptr::null_mut());

        let mut r = ptr::null_mut();
        let bad = CString::new(r#"{"experiment": {"kind": "nope"}}"#).unwrap();
        assert_eq!(dqip_run(bad.as_ptr(), &mut r), DqipStatus::Config);
        assert!(r.is_null());
    }
}

#[test]
fn ghz_certification() {
    let (mut p, mut f) = (0.0, 0.0);
    unsafe {
        assert_eq!(dqip_ghz_certify_path(3, 1, &mut p, &mut f), DqipStatus::Ok);
        assert!((p - 1.0).abs() < 1e-9 && f > 1.0 - 1e-9);
        assert_eq!(dqip_ghz_certify_path(3, 0, &mut p, &mut f), DqipStatus::Config);
    }
}

#[test]
fn reports_expose_metrics_and_text() {
    let config = CString::new(
        r#"{"experiment": {"kind": "dqct", "graph": {"family": "path", "nodes": 2}, "qubits_per_node": [1, 1], "inputs": "orthogonal"}}"#,
    )
    .unwrap();
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(dqip_run(config.as_ptr(), &mut r), DqipStatus::Ok);
        let name = CString::new("acceptance").unwrap();
        let mut v = 0.0;
        assert_eq!(dqip_report_metric(r, name.as_ptr(), &mut v), DqipStatus::Ok);
        assert!((v - 0.5).abs() < 1e-9);
        let json = CStr::from_ptr(dqip_report_json(r)).to_str().unwrap();
        assert!(json.contains("\"tool\": \"dqip\""));
        let csv = CStr::from_ptr(dqip_report_csv(r)).to_str().unwrap();
        assert!(csv.starts_with("experiment,metric,value"));
        let missing = CString::new("nothing").unwrap();
        assert_eq!(dqip_report_metric(r, missing.as_ptr(), &mut v), DqipStatus::Validation);
        dqip_report_free(r);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(dqip_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/dqip.h");
    let src = include_str!("../src/lib.rs");
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}
