use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use avn_ffi::*;

fn predict(config: Option<&str>) -> (AvnStatus, *mut AvnReport) {
    let c = config.map(|s| CString::new(s).unwrap());
    let mut out = ptr::null_mut();
    let status = unsafe { avn_predict(c.as_ref().map_or(ptr::null(), |s| s.as_ptr()), &mut out) };
    (status, out)
}

fn last_error() -> String {
    let p = avn_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn default_prediction() {
    let (status, r) = predict(None);
    assert_eq!(status, AvnStatus::Ok);
    unsafe {
        assert!((avn_report_bell_value(r) - 9.0).abs() < 1e-12);
        assert_eq!(avn_report_bell_stderr(r), 0.0);
        assert!((avn_report_m_fidelity(r) - 1.0).abs() < 1e-10);
        let (mut e, mut se, mut n) = (0.0, -1.0, 7u64);
        assert_eq!(
            avn_report_correlation(r, 3, &mut e, &mut se, &mut n),
            AvnStatus::Ok
        );
        assert_eq!((e, se, n), (-1.0, 0.0, 0));
        assert_eq!(
            avn_report_correlation(r, 9, &mut e, ptr::null_mut(), ptr::null_mut()),
            AvnStatus::OutOfRange
        );
        avn_report_free(r);
    }
}

#[test]
fn noisy_prediction_and_json() {
    let (status, r) = predict(Some(
        r#"{"noise": {"white_noise_weight": 0.2222222222222222}}"#,
    ));
    assert_eq!(status, AvnStatus::Ok);
    unsafe {
        assert!((avn_report_bell_value(r) - 7.0).abs() < 1e-12);
        let mut s = ptr::null_mut();
        assert_eq!(avn_report_json(r, &mut s), AvnStatus::Ok);
        let doc: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
        assert_eq!(doc["command"], "predict");
        avn_string_free(s);
        avn_report_free(r);
    }
}

#[test]
fn simulation_is_seeded() {
    let cfg = CString::new(r#"{"seed": 99, "noise": {"white_noise_weight": 0.1}}"#).unwrap();
    unsafe {
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(avn_simulate(cfg.as_ptr(), &mut a), AvnStatus::Ok);
        assert_eq!(avn_simulate(cfg.as_ptr(), &mut b), AvnStatus::Ok);
        assert_eq!(avn_report_bell_value(a), avn_report_bell_value(b));
        assert!(avn_report_bell_stderr(a) > 0.0);
        let mut n = 0u64;
        assert_eq!(
            avn_report_correlation(a, 0, ptr::null_mut(), ptr::null_mut(), &mut n),
            AvnStatus::Ok
        );
        assert!(n > 30_000 && n < 34_000, "{n}");
        avn_report_free(a);
        avn_report_free(b);
    }
}

#[test]
fn error_codes() {
    let (status, r) = predict(Some("{not json"));
    assert_eq!(status, AvnStatus::InvalidConfig);
    assert!(r.is_null());
    assert!(!last_error().is_empty());

    let (status, _) = predict(Some(r#"{"noise": {"pol_visibility": 3.0}}"#));
    assert_eq!(status, AvnStatus::ModelError);
    assert!(last_error().contains("pol_visibility"));

    let bad = [0xffu8, 0xfe, 0];
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { avn_predict(bad.as_ptr().cast(), &mut out) },
        AvnStatus::InvalidUtf8
    );
    assert_eq!(
        unsafe { avn_predict(ptr::null(), ptr::null_mut()) },
        AvnStatus::NullPointer
    );
    assert!(unsafe { avn_report_bell_value(ptr::null()) }.is_nan());
    unsafe {
        avn_report_free(ptr::null_mut());
        avn_string_free(ptr::null_mut());
    }
}

#[test]
fn certificate_json() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { avn_lhv_certificate_json(&mut s) }, AvnStatus::Ok);
    let doc: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(s) }.to_str().unwrap()).unwrap();
    unsafe { avn_string_free(s) };
    assert_eq!(doc["audit"]["all_satisfied_count"], 0);
    assert_eq!(doc["bound"]["max_value"], 7);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(avn_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(include_dir().join("avn.h")).unwrap();
    for name in [
        "avn_predict",
        "avn_simulate",
        "avn_report_free",
        "avn_report_bell_value",
        "avn_report_correlation",
        "avn_report_json",
        "avn_lhv_certificate_json",
        "avn_string_free",
        "avn_last_error",
        "typedef struct AvnReport AvnReport",
        "AVN_STATUS_INVALID_CONFIG = 3",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

/// Compiles and runs a C program against the static library when a C
/// compiler and the archive are available.
#[test]
fn c_program_links_and_runs() {
    let Some(profile_dir) = std::env::current_exe()
        .unwrap()
        .parent()
        .and_then(|p| p.parent())
        .map(Path::to_path_buf)
    else {
        return;
    };
    let archive = profile_dir.join("libavn_ffi.a");
    if !archive.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or {}", archive.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("c_smoke");
    let src = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("c_smoke.c");
    let build = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(include_dir())
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(
        build.status.success(),
        "{}",
        String::from_utf8_lossy(&build.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert_eq!(run.status.code(), Some(0));
    let text = String::from_utf8(run.stdout).unwrap();
    assert_eq!(text.trim(), "4.500000000000 -0.500000000000 error-set");
}
