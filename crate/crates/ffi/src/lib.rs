//! C ABI for the OTOC protocol simulator.
//!
//! Conventions:
//! - every function returns an [`OtocStatus`] code; results come back
//!   through out-pointers;
//! - handles ([`OtocSpec`], [`OtocSeries`]) are opaque and must be released
//!   with the matching `_free` function;
//! - `otoc_last_error_message` returns a thread-local description of the
//!   most recent failure;
//! - undefined values (e.g. `O_corr` where the reference branch vanishes)
//!   are reported as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use otoc_ladder::config::ExperimentSpec;
use otoc_ladder::runner::{fidelity_scan, run, RunRecord};
use otoc_ladder::Error;

/// Status codes returned by every API function.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OtocStatus {
    Ok = 0,
    /// Null pointer or malformed argument at the FFI boundary.
    InvalidArgument = 1,
    /// The spec failed validation.
    Validation = 2,
    /// A numerical stage failed (convergence, guard violation, ...).
    Compute = 3,
}

/// Column selectors for `otoc_series_column`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OtocColumn {
    Times = 0,
    OG = 1,
    NG = 2,
    OCorr = 3,
    OTh = 4,
    OTfd = 5,
    OGNorm = 6,
    OThNorm = 7,
    SigmaCorr = 8,
}

/// Opaque experiment description handle.
pub struct OtocSpec {
    inner: ExperimentSpec,
}

/// Opaque result handle holding one completed run.
pub struct OtocSeries {
    record: RunRecord,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(e: &Error) -> OtocStatus {
    match e {
        Error::InvalidSpec(_) | Error::InvalidSector { .. } | Error::BasisMismatch(_) => {
            OtocStatus::Validation
        }
        _ => OtocStatus::Compute,
    }
}

fn guarded(body: impl FnOnce() -> OtocStatus) -> OtocStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            OtocStatus::Compute
        }
    }
}

/// # Safety
/// `ptr` must be a valid NUL-terminated string or null.
unsafe fn read_str<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn otoc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Description of the most recent error on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn otoc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses a flat key=value config into a new spec handle. Pass an empty
/// string for the default spec.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn otoc_spec_parse(
    text: *const c_char,
    out: *mut *mut OtocSpec,
) -> OtocStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return OtocStatus::InvalidArgument;
        }
        let Some(text) = read_str(text) else {
            set_error("config text is null or not UTF-8");
            return OtocStatus::InvalidArgument;
        };
        match ExperimentSpec::parse(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(OtocSpec { inner }));
                OtocStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Applies one key=value assignment to an existing spec.
///
/// # Safety
/// All pointers must be valid; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn otoc_spec_set(
    spec: *mut OtocSpec,
    key: *const c_char,
    value: *const c_char,
) -> OtocStatus {
    guarded(|| {
        let Some(spec) = spec.as_mut() else {
            set_error("spec handle is null");
            return OtocStatus::InvalidArgument;
        };
        let (Some(key), Some(value)) = (read_str(key), read_str(value)) else {
            set_error("key/value is null or not UTF-8");
            return OtocStatus::InvalidArgument;
        };
        match spec.inner.set(key, value) {
            Ok(()) => OtocStatus::Ok,
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Releases a spec handle. Null is a no-op.
///
/// # Safety
/// `spec` must come from `otoc_spec_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn otoc_spec_free(spec: *mut OtocSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Executes the full pipeline for a spec, producing a series handle.
///
/// # Safety
/// `spec` must be a live spec handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn otoc_run(spec: *const OtocSpec, out: *mut *mut OtocSeries) -> OtocStatus {
    guarded(|| {
        let Some(spec) = spec.as_ref() else {
            set_error("spec handle is null");
            return OtocStatus::InvalidArgument;
        };
        if out.is_null() {
            set_error("out pointer is null");
            return OtocStatus::InvalidArgument;
        }
        match run(&spec.inner) {
            Ok(record) => {
                *out = Box::into_raw(Box::new(OtocSeries { record }));
                OtocStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Number of time points in a result series.
///
/// # Safety
/// `series` must be a live series handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn otoc_series_len(
    series: *const OtocSeries,
    out: *mut usize,
) -> OtocStatus {
    guarded(|| {
        let (Some(series), false) = (series.as_ref(), out.is_null()) else {
            set_error("null handle or out pointer");
            return OtocStatus::InvalidArgument;
        };
        *out = series.record.series.times.len();
        OtocStatus::Ok
    })
}

/// Copies one column into `buffer` (capacity `len`, must equal
/// `otoc_series_len`). Undefined entries are NaN.
///
/// # Safety
/// `buffer` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn otoc_series_column(
    series: *const OtocSeries,
    column: OtocColumn,
    buffer: *mut f64,
    len: usize,
) -> OtocStatus {
    guarded(|| {
        let Some(series) = series.as_ref() else {
            set_error("series handle is null");
            return OtocStatus::InvalidArgument;
        };
        let s = &series.record.series;
        let data: &[f64] = match column {
            OtocColumn::Times => &s.times,
            OtocColumn::OG => &s.o_g,
            OtocColumn::NG => &s.n_g,
            OtocColumn::OCorr => &s.o_corr,
            OtocColumn::OTh => &s.o_th,
            OtocColumn::OTfd => &s.o_tfd,
            OtocColumn::OGNorm => &s.o_g_norm,
            OtocColumn::OThNorm => &s.o_th_norm,
            OtocColumn::SigmaCorr => &s.sigma_corr,
        };
        if buffer.is_null() || len != data.len() {
            set_error("buffer is null or has the wrong length");
            return OtocStatus::InvalidArgument;
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buffer, len);
        OtocStatus::Ok
    })
}

/// Extracted half-height slope κ, or NaN when the series never crosses 0.5.
///
/// # Safety
/// `series` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn otoc_series_kappa(
    series: *const OtocSeries,
    out: *mut f64,
) -> OtocStatus {
    guarded(|| {
        let (Some(series), false) = (series.as_ref(), out.is_null()) else {
            set_error("null handle or out pointer");
            return OtocStatus::InvalidArgument;
        };
        *out = series.record.series.kappa.unwrap_or(f64::NAN);
        OtocStatus::Ok
    })
}

/// Renders the result as CSV; the returned string must be released with
/// `otoc_string_free`.
///
/// # Safety
/// `series` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn otoc_series_csv(
    series: *const OtocSeries,
    out: *mut *mut c_char,
) -> OtocStatus {
    guarded(|| {
        let (Some(series), false) = (series.as_ref(), out.is_null()) else {
            set_error("null handle or out pointer");
            return OtocStatus::InvalidArgument;
        };
        let csv = otoc_ladder::output::render_csv(&series.record.series);
        match CString::new(csv) {
            Ok(cstr) => {
                *out = cstr.into_raw();
                OtocStatus::Ok
            }
            Err(_) => {
                set_error("CSV contained an interior NUL");
                OtocStatus::Compute
            }
        }
    })
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn otoc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a series handle. Null is a no-op.
///
/// # Safety
/// `series` must come from `otoc_run` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn otoc_series_free(series: *mut OtocSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Fidelity-optimal inverse temperature for one (n, λ): writes β₀, the
/// effective temperature T₀ = 1/β₀, and the optimal fidelity F.
///
/// # Safety
/// The out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn otoc_fidelity(
    n: usize,
    lambda: f64,
    beta0: *mut f64,
    t0: *mut f64,
    f: *mut f64,
) -> OtocStatus {
    guarded(|| {
        if beta0.is_null() || t0.is_null() || f.is_null() {
            set_error("out pointer is null");
            return OtocStatus::InvalidArgument;
        }
        match fidelity_scan(n, lambda) {
            Ok(r) => {
                *beta0 = r.beta0;
                *t0 = r.t0;
                *f = r.f;
                OtocStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn parse(text: &str) -> *mut OtocSpec {
        let ctext = CString::new(text).unwrap();
        let mut spec: *mut OtocSpec = ptr::null_mut();
        let status = unsafe { otoc_spec_parse(ctext.as_ptr(), &mut spec) };
        assert_eq!(status, OtocStatus::Ok);
        spec
    }

    #[test]
    fn run_through_the_c_abi() {
        let spec = parse("n = 3\nlambda = inf\nW = Z@2\nV = X@1\ntimes.stop = 0.5\ntimes.step = 0.25\n");
        let mut series: *mut OtocSeries = ptr::null_mut();
        unsafe {
            assert_eq!(otoc_run(spec, &mut series), OtocStatus::Ok);
            let mut len = 0usize;
            assert_eq!(otoc_series_len(series, &mut len), OtocStatus::Ok);
            assert_eq!(len, 3);
            let mut o_corr = vec![0.0; len];
            assert_eq!(
                otoc_series_column(series, OtocColumn::OCorr, o_corr.as_mut_ptr(), len),
                OtocStatus::Ok
            );
            assert!((o_corr[0] - 1.0).abs() < 1e-9);
            let mut csv: *mut c_char = ptr::null_mut();
            assert_eq!(otoc_series_csv(series, &mut csv), OtocStatus::Ok);
            let text = CStr::from_ptr(csv).to_str().unwrap().to_string();
            assert!(text.starts_with("t,O_g,N_g"));
            otoc_string_free(csv);
            otoc_series_free(series);
            otoc_spec_free(spec);
        }
    }

    #[test]
    fn validation_errors_surface_with_messages() {
        let ctext = CString::new("n = 1\n").unwrap();
        let mut spec: *mut OtocSpec = ptr::null_mut();
        let status = unsafe { otoc_spec_parse(ctext.as_ptr(), &mut spec) };
        assert_eq!(status, OtocStatus::Validation);
        let msg = unsafe { CStr::from_ptr(otoc_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("n"));
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            let mut out = ptr::null_mut();
            assert_eq!(
                otoc_spec_parse(ptr::null(), &mut out),
                OtocStatus::InvalidArgument
            );
            assert_eq!(otoc_run(ptr::null(), &mut out as *mut _ as *mut *mut OtocSeries), OtocStatus::InvalidArgument);
            otoc_spec_free(ptr::null_mut());
            otoc_series_free(ptr::null_mut());
            otoc_string_free(ptr::null_mut());
        }
    }

    #[test]
    fn fidelity_entry_point() {
        let (mut beta0, mut t0, mut f) = (0.0, 0.0, 0.0);
        let status = unsafe { otoc_fidelity(2, 2.0, &mut beta0, &mut t0, &mut f) };
        assert_eq!(status, OtocStatus::Ok);
        assert!((2.0 * beta0.sinh() - 1.0).abs() < 1e-5);
        assert!(f > 1.0 - 1e-9);
        assert!((t0 - 1.0 / beta0).abs() < 1e-9);
    }
}
