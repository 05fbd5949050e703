//! C ABI for kcone.
//!
//! Cones and maps live behind opaque handles. Structured results come back as
//! JSON strings owned by the library; release them with `kcone_string_free`.
//! Every entry point returns a [`KconeStatus`]; on failure the message is
//! available from `kcone_last_error` on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kcone::convexity::test_k_convexity;
use kcone::hull::{verify_epi_equals_hull, HullConfig};
use kcone::maps::parse_map;
use kcone::{Cone, KconeError, MapSpec, Point, Verdict};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KconeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Dimension = 4,
    Numerical = 5,
    Unsupported = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KconeVerdictKind {
    Consistent = 0,
    ExactTrue = 1,
    ExactFalse = 2,
    Refuted = 3,
}

/// Opaque cone handle.
pub struct KconeCone(Cone);

/// Opaque map handle.
pub struct KconeMap(MapSpec);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(KconeStatus, String);

impl From<KconeError> for Fail {
    fn from(e: KconeError) -> Self {
        let status = match &e {
            KconeError::Parse(_) => KconeStatus::Parse,
            KconeError::SpaceMismatch { .. } | KconeError::DimensionMismatch(_) => KconeStatus::Dimension,
            KconeError::Unsupported(_) | KconeError::NeedsHRep => KconeStatus::Unsupported,
            _ => KconeStatus::Numerical,
        };
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> KconeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KconeStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            KconeStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail(KconeStatus::NullPointer, "null string".into()));
    }
    CStr::from_ptr(s).to_str().map_err(|e| Fail(KconeStatus::InvalidUtf8, e.to_string()))
}

unsafe fn read_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(KconeStatus::NullPointer, format!("null {what}")))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(KconeStatus::NullPointer, "null coordinate buffer".into()));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(KconeStatus::NullPointer, "null output pointer".into()));
    }
    out.write(v);
    Ok(())
}

unsafe fn write_json(out: *mut *mut c_char, v: &impl serde::Serialize) -> Result<(), Fail> {
    let s = serde_json::to_string(v).map_err(|e| Fail(KconeStatus::Numerical, e.to_string()))?;
    let c = CString::new(s).map_err(|e| Fail(KconeStatus::Numerical, e.to_string()))?;
    write_out(out, c.into_raw())
}

fn verdict_kind(v: &Verdict) -> KconeVerdictKind {
    match v {
        Verdict::Consistent { .. } => KconeVerdictKind::Consistent,
        Verdict::Exact { holds: true, .. } => KconeVerdictKind::ExactTrue,
        Verdict::Exact { holds: false, .. } => KconeVerdictKind::ExactFalse,
        Verdict::Refuted { .. } => KconeVerdictKind::Refuted,
    }
}

unsafe fn emit_verdict(v: &Verdict, kind: *mut KconeVerdictKind, json: *mut *mut c_char) -> Result<(), Fail> {
    if !kind.is_null() {
        kind.write(verdict_kind(v));
    }
    if !json.is_null() {
        write_json(json, v)?;
    }
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kcone_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn kcone_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kcone_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a named cone (`psd:2`, `spectral:3`, `orthant:4`, ...) or cone JSON.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kcone_cone_parse(spec: *const c_char, out: *mut *mut KconeCone) -> KconeStatus {
    guard(|| {
        let k = kcone::cli::parse_cone(read_str(spec)?)?;
        write_out(out, Box::into_raw(Box::new(KconeCone(k))))
    })
}

/// # Safety
/// `cone` must come from `kcone_cone_parse` (or be null) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kcone_cone_free(cone: *mut KconeCone) {
    if !cone.is_null() {
        drop(Box::from_raw(cone));
    }
}

/// Embedded dimension of the cone's ambient space, 0 for null.
///
/// # Safety
/// `cone` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn kcone_cone_dim(cone: *const KconeCone) -> usize {
    cone.as_ref().map_or(0, |k| k.0.space.ambient_dim())
}

/// Cone as JSON.
///
/// # Safety
/// `cone` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kcone_cone_to_json(cone: *const KconeCone, out: *mut *mut c_char) -> KconeStatus {
    guard(|| write_json(out, &read_ref(cone, "cone")?.0))
}

/// New handle for the polar cone.
///
/// # Safety
/// `cone` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kcone_cone_polar(cone: *const KconeCone, out: *mut *mut KconeCone) -> KconeStatus {
    guard(|| {
        let p = read_ref(cone, "cone")?.0.polar();
        write_out(out, Box::into_raw(Box::new(KconeCone(p))))
    })
}

/// Writes 1 to `inside` if the point lies in the cone, else 0.
///
/// # Safety
/// `coords` must hold `len` doubles; `inside` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kcone_cone_contains(
    cone: *const KconeCone,
    coords: *const f64,
    len: usize,
    tol: f64,
    inside: *mut i32,
) -> KconeStatus {
    guard(|| {
        let k = &read_ref(cone, "cone")?.0;
        let p = Point::new(k.space, read_slice(coords, len)?.to_vec())?;
        write_out(inside, i32::from(k.contains(&p, tol)?))
    })
}

/// Sampled or exact check of K ⊂ dual(K). `json` may be null.
///
/// # Safety
/// `cone` must be a live handle; `kind` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kcone_cone_self_dual(
    cone: *const KconeCone,
    n_dirs: usize,
    seed: u64,
    kind: *mut KconeVerdictKind,
    json: *mut *mut c_char,
) -> KconeStatus {
    guard(|| {
        let v = read_ref(cone, "cone")?.0.check_self_dual_inclusion(n_dirs, seed);
        write_out(kind, verdict_kind(&v))?;
        emit_verdict(&v, ptr::null_mut(), json)
    })
}

/// Parses a named map (`gramhalf:2x2`, `inverse:2`, `xsq-y`, ...) or map JSON.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kcone_map_parse(spec: *const c_char, out: *mut *mut KconeMap) -> KconeStatus {
    guard(|| {
        let f = parse_map(read_str(spec)?)?;
        write_out(out, Box::into_raw(Box::new(KconeMap(f))))
    })
}

/// # Safety
/// `map` must come from `kcone_map_parse` (or be null) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kcone_map_free(map: *mut KconeMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Input and output embedded dimensions.
///
/// # Safety
/// `map` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn kcone_map_dims(map: *const KconeMap, input: *mut usize, output: *mut usize) -> KconeStatus {
    guard(|| {
        let f = &read_ref(map, "map")?.0;
        write_out(input, f.input_space().ambient_dim())?;
        write_out(output, f.output_space().ambient_dim())
    })
}

/// Evaluates F(x) into `out` (capacity `out_len`, at least the output dimension).
///
/// # Safety
/// `x` must hold `len` doubles and `out` must hold `out_len`.
#[no_mangle]
pub unsafe extern "C" fn kcone_map_eval(
    map: *const KconeMap,
    x: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> KconeStatus {
    guard(|| {
        let f = &read_ref(map, "map")?.0;
        let p = Point::new(f.input_space(), read_slice(x, len)?.to_vec())?;
        let y = f.eval(&p)?;
        if out_len < y.coords.len() {
            return Err(Fail(KconeStatus::BufferTooSmall, format!("need {} doubles, got {out_len}", y.coords.len())));
        }
        if out.is_null() {
            return Err(Fail(KconeStatus::NullPointer, "null output buffer".into()));
        }
        ptr::copy_nonoverlapping(y.coords.as_ptr(), out, y.coords.len());
        Ok(())
    })
}

/// K-convexity test of `map` against `cone`. `json` may be null.
///
/// # Safety
/// Handles must be live; `kind` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kcone_check_k_convexity(
    map: *const KconeMap,
    cone: *const KconeCone,
    budget: usize,
    seed: u64,
    kind: *mut KconeVerdictKind,
    json: *mut *mut c_char,
) -> KconeStatus {
    guard(|| {
        let v = test_k_convexity(&read_ref(map, "map")?.0, &read_ref(cone, "cone")?.0, budget, seed)?;
        write_out(kind, verdict_kind(&v))?;
        emit_verdict(&v, ptr::null_mut(), json)
    })
}

/// Full epigraph-versus-hull report with default settings and `seed`.
/// `kind` receives the overall verdict; `json` the report (may be null).
///
/// # Safety
/// Handles must be live; `kind` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kcone_verify_epi_hull(
    map: *const KconeMap,
    cone: *const KconeCone,
    seed: u64,
    kind: *mut KconeVerdictKind,
    json: *mut *mut c_char,
) -> KconeStatus {
    guard(|| {
        let cfg = HullConfig { seed, ..HullConfig::default() };
        let r = verify_epi_equals_hull(&read_ref(map, "map")?.0, &read_ref(cone, "cone")?.0, &cfg)?;
        write_out(kind, verdict_kind(&r.overall))?;
        if !json.is_null() {
            write_json(json, &r)?;
        }
        Ok(())
    })
}

/// Runs the command line given as a JSON array of arguments (without the
/// program name). Writes the process exit code and the report text.
///
/// # Safety
/// `args_json` must be NUL-terminated; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn kcone_run_cli(
    args_json: *const c_char,
    exit_code: *mut i32,
    report: *mut *mut c_char,
) -> KconeStatus {
    guard(|| {
        let args: Vec<String> =
            serde_json::from_str(read_str(args_json)?).map_err(|e| Fail(KconeStatus::Parse, e.to_string()))?;
        let out = kcone::cli::run(std::iter::once("kcone".to_string()).chain(args));
        write_out(exit_code, out.code)?;
        let c = CString::new(out.text).map_err(|e| Fail(KconeStatus::Numerical, e.to_string()))?;
        write_out(report, c.into_raw())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_mapping() {
        let f: Fail = KconeError::Parse("x".into()).into();
        assert_eq!(f.0, KconeStatus::Parse);
        let f: Fail = KconeError::NotPointed.into();
        assert_eq!(f.0, KconeStatus::Numerical);
    }

    #[test]
    fn panics_are_caught() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, KconeStatus::Panic);
        let msg = unsafe { CStr::from_ptr(kcone_last_error()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
    }
}
