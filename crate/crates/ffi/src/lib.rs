//! C ABI over `avn-core`.
//!
//! Reports are opaque handles released with [`avn_report_free`]. Strings
//! returned to the caller are released with [`avn_string_free`]. Every
//! fallible call returns an [`AvnStatus`]; the message for the most recent
//! failure on the calling thread is available from [`avn_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use avn_core::cli::{self, CliError, RunConfig, RunDocument};
use avn_core::lhv::Certificate;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    ModelError = 4,
    CertificateFailed = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Result of a prediction or a simulation.
pub struct AvnReport {
    doc: RunDocument,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: AvnStatus, message: impl Into<String>) -> AvnStatus {
    set_error(message);
    status
}

fn status_of(err: &CliError) -> AvnStatus {
    match err {
        CliError::Config(_) | CliError::Io(_) => AvnStatus::InvalidConfig,
        CliError::Model(_) => AvnStatus::ModelError,
        CliError::Certificate(_) => AvnStatus::CertificateFailed,
    }
}

fn guarded(body: impl FnOnce() -> AvnStatus) -> AvnStatus {
    catch_unwind(AssertUnwindSafe(body))
        .unwrap_or_else(|_| fail(AvnStatus::Panic, "internal panic"))
}

unsafe fn parse_config(config_json: *const c_char) -> Result<RunConfig, AvnStatus> {
    if config_json.is_null() {
        return Ok(RunConfig::default());
    }
    let text = CStr::from_ptr(config_json)
        .to_str()
        .map_err(|e| fail(AvnStatus::InvalidUtf8, e.to_string()))?;
    let config: RunConfig =
        serde_json::from_str(text).map_err(|e| fail(AvnStatus::InvalidConfig, e.to_string()))?;
    config
        .validate()
        .map_err(|e| fail(status_of(&e), e.to_string()))?;
    Ok(config)
}

unsafe fn run_report(
    config_json: *const c_char,
    out: *mut *mut AvnReport,
    run: fn(&RunConfig) -> Result<RunDocument, CliError>,
) -> AvnStatus {
    guarded(|| {
        if out.is_null() {
            return fail(AvnStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let config = match parse_config(config_json) {
            Ok(c) => c,
            Err(status) => return status,
        };
        match run(&config) {
            Ok(doc) => {
                *out = Box::into_raw(Box::new(AvnReport { doc }));
                AvnStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

fn into_c_string(text: String, out: *mut *mut c_char) -> AvnStatus {
    match CString::new(text) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            AvnStatus::Ok
        }
        Err(e) => fail(AvnStatus::InvalidUtf8, e.to_string()),
    }
}

/// Exact quantum predictions. `config_json` may be null for the defaults.
///
/// # Safety
/// `config_json` is null or a NUL-terminated string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avn_predict(
    config_json: *const c_char,
    out: *mut *mut AvnReport,
) -> AvnStatus {
    run_report(config_json, out, cli::predict)
}

/// Seeded simulation. `config_json` may be null for the defaults.
///
/// # Safety
/// `config_json` is null or a NUL-terminated string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avn_simulate(
    config_json: *const c_char,
    out: *mut *mut AvnReport,
) -> AvnStatus {
    run_report(config_json, out, cli::simulate)
}

/// # Safety
/// `report` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn avn_report_free(report: *mut AvnReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Bell-operator value, NaN for a null handle.
///
/// # Safety
/// `report` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn avn_report_bell_value(report: *const AvnReport) -> f64 {
    report
        .as_ref()
        .map_or(f64::NAN, |r| r.doc.report.bell_value)
}

/// # Safety
/// `report` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn avn_report_bell_stderr(report: *const AvnReport) -> f64 {
    report
        .as_ref()
        .map_or(f64::NAN, |r| r.doc.report.bell_stderr)
}

/// # Safety
/// `report` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn avn_report_m_fidelity(report: *const AvnReport) -> f64 {
    report
        .as_ref()
        .map_or(f64::NAN, |r| r.doc.report.m_fidelity)
}

/// Correlation `index` (0 = ZZ … 8 = M). Any of the output pointers may be null.
///
/// # Safety
/// `report` is a live handle; non-null outputs are valid for writes.
#[no_mangle]
pub unsafe extern "C" fn avn_report_correlation(
    report: *const AvnReport,
    index: usize,
    value: *mut f64,
    std_error: *mut f64,
    n: *mut u64,
) -> AvnStatus {
    let Some(r) = report.as_ref() else {
        return fail(AvnStatus::NullPointer, "report is null");
    };
    let Some(c) = r.doc.report.correlations.get(index) else {
        return fail(
            AvnStatus::OutOfRange,
            format!("correlation index {index} out of range"),
        );
    };
    if !value.is_null() {
        *value = c.value;
    }
    if !std_error.is_null() {
        *std_error = c.stderr;
    }
    if !n.is_null() {
        *n = c.n;
    }
    AvnStatus::Ok
}

/// Full report document as JSON; release with [`avn_string_free`].
///
/// # Safety
/// `report` is a live handle; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avn_report_json(
    report: *const AvnReport,
    out: *mut *mut c_char,
) -> AvnStatus {
    guarded(|| {
        if out.is_null() {
            return fail(AvnStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        match report.as_ref() {
            Some(r) => into_c_string(avn_core::render::json(&r.doc), out),
            None => fail(AvnStatus::NullPointer, "report is null"),
        }
    })
}

/// Local-realism certificate as JSON. The document is written even when a
/// check fails, in which case the status is `CertificateFailed`.
///
/// # Safety
/// `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avn_lhv_certificate_json(out: *mut *mut c_char) -> AvnStatus {
    guarded(|| {
        if out.is_null() {
            return fail(AvnStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let cert = Certificate::build();
        match into_c_string(avn_core::render::json(&cert), out) {
            AvnStatus::Ok if !cert.is_valid() => {
                fail(AvnStatus::CertificateFailed, "certificate checks failed")
            }
            status => status,
        }
    })
}

/// # Safety
/// `s` is null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn avn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn avn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn avn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
