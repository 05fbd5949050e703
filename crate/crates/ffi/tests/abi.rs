use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use kcone_ffi::*;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { kcone_string_free(s) };
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(kcone_last_error()) }.to_str().unwrap().to_owned()
}

fn cone(spec: &str) -> *mut KconeCone {
    let s = CString::new(spec).unwrap();
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { kcone_cone_parse(s.as_ptr(), &mut k) }, KconeStatus::Ok);
    k
}

fn map(spec: &str) -> *mut KconeMap {
    let s = CString::new(spec).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { kcone_map_parse(s.as_ptr(), &mut f) }, KconeStatus::Ok);
    f
}

#[test]
fn cone_roundtrip_and_membership() {
    let k = cone("psd:2");
    assert_eq!(unsafe { kcone_cone_dim(k) }, 3);
    let mut inside = -1;
    let eye = [1.0, 0.0, 1.0];
    assert_eq!(unsafe { kcone_cone_contains(k, eye.as_ptr(), 3, 1e-9, &mut inside) }, KconeStatus::Ok);
    assert_eq!(inside, 1);
    let bad = [1.0, 0.0, -1.0];
    unsafe { kcone_cone_contains(k, bad.as_ptr(), 3, 1e-9, &mut inside) };
    assert_eq!(inside, 0);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { kcone_cone_to_json(k, &mut json) }, KconeStatus::Ok);
    let text = take(json);
    let c = CString::new(text).unwrap();
    let mut k2 = ptr::null_mut();
    assert_eq!(unsafe { kcone_cone_parse(c.as_ptr(), &mut k2) }, KconeStatus::Ok);
    assert_eq!(unsafe { kcone_cone_dim(k2) }, 3);

    let mut p = ptr::null_mut();
    assert_eq!(unsafe { kcone_cone_polar(k, &mut p) }, KconeStatus::Ok);
    let neg = [-1.0, 0.0, -1.0];
    unsafe { kcone_cone_contains(p, neg.as_ptr(), 3, 1e-9, &mut inside) };
    assert_eq!(inside, 1);
    unsafe {
        kcone_cone_free(k);
        kcone_cone_free(k2);
        kcone_cone_free(p);
        kcone_cone_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_reported() {
    let s = CString::new("cube:3").unwrap();
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { kcone_cone_parse(s.as_ptr(), &mut k) }, KconeStatus::Parse);
    assert!(k.is_null());
    assert!(last_error().contains("cube"));

    assert_eq!(unsafe { kcone_cone_parse(ptr::null(), &mut k) }, KconeStatus::NullPointer);

    let k = cone("orthant:3");
    let mut inside = 0;
    let short = [1.0, 2.0];
    assert_eq!(unsafe { kcone_cone_contains(k, short.as_ptr(), 2, 1e-9, &mut inside) }, KconeStatus::Dimension);
    unsafe { kcone_cone_free(k) };
}

#[test]
fn spectral_self_dual() {
    let mut kind = KconeVerdictKind::Consistent;
    let mut json = ptr::null_mut();
    let k3 = cone("spectral:3");
    assert_eq!(unsafe { kcone_cone_self_dual(k3, 100, 0, &mut kind, &mut json) }, KconeStatus::Ok);
    assert_eq!(kind, KconeVerdictKind::Refuted);
    assert!(take(json).contains("refuted"));
    let k2 = cone("spectral:2");
    unsafe { kcone_cone_self_dual(k2, 100, 0, &mut kind, ptr::null_mut()) };
    assert_ne!(kind, KconeVerdictKind::Refuted);
    unsafe {
        kcone_cone_free(k3);
        kcone_cone_free(k2);
    }
}

#[test]
fn map_eval_and_checks() {
    let f = map("square:2");
    let (mut din, mut dout) = (0, 0);
    assert_eq!(unsafe { kcone_map_dims(f, &mut din, &mut dout) }, KconeStatus::Ok);
    assert_eq!((din, dout), (3, 3));
    // X = [[1,2],[2,3]] in svec form, X^2 = [[5,8],[8,13]].
    let s2 = std::f64::consts::SQRT_2;
    let x = [1.0, 2.0 * s2, 3.0];
    let mut y = [0.0; 3];
    assert_eq!(unsafe { kcone_map_eval(f, x.as_ptr(), 3, y.as_mut_ptr(), 3) }, KconeStatus::Ok);
    for (a, b) in y.iter().zip([5.0, 8.0 * s2, 13.0]) {
        assert!((a - b).abs() < 1e-12, "{y:?}");
    }
    assert_eq!(unsafe { kcone_map_eval(f, x.as_ptr(), 3, y.as_mut_ptr(), 2) }, KconeStatus::BufferTooSmall);

    let psd = cone("psd:2");
    let trivial = cone("trivial:sym:2");
    let mut kind = KconeVerdictKind::Refuted;
    assert_eq!(unsafe { kcone_check_k_convexity(f, psd, 100, 1, &mut kind, ptr::null_mut()) }, KconeStatus::Ok);
    assert_ne!(kind, KconeVerdictKind::Refuted);
    unsafe { kcone_check_k_convexity(f, trivial, 100, 1, &mut kind, ptr::null_mut()) };
    assert_eq!(kind, KconeVerdictKind::Refuted);
    unsafe {
        kcone_map_free(f);
        kcone_cone_free(psd);
        kcone_cone_free(trivial);
    }
}

#[test]
fn epi_hull_report() {
    let f = map("gramhalf:2x2");
    let k = cone("psd:2");
    let mut kind = KconeVerdictKind::Refuted;
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { kcone_verify_epi_hull(f, k, 0, &mut kind, &mut json) }, KconeStatus::Ok);
    assert_ne!(kind, KconeVerdictKind::Refuted);
    let report: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    assert!(report.get("self_dual_inclusion").is_some());
    unsafe {
        kcone_map_free(f);
        kcone_cone_free(k);
    }
}

#[test]
fn cli_passthrough() {
    let args = CString::new(r#"["cone","self-dual","--cone","spectral:3"]"#).unwrap();
    let mut code = -1;
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { kcone_run_cli(args.as_ptr(), &mut code, &mut report) }, KconeStatus::Ok);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&take(report)).unwrap();
    assert_eq!(v["schema"], "v1");
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(kcone_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/kcone.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["kcone_cone_parse", "kcone_string_free", "kcone_last_error", "KCONE_STATUS_OK"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(out) =
        Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99", "-Wall", "-Werror"]).arg(&header).output()
    else {
        eprintln!("no C compiler, skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
