//! C ABI for the DOA estimation toolkit.
//!
//! Opaque handles own the Rust objects; every function returns (or reports
//! through) a [`DoaStatus`] and the last error message is kept per thread.
//! The header `include/doa.h` is generated by cbindgen at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use doa_core::array_model::{ArrayGeometry, SnapshotMatrix};
use doa_core::cli::estimate_json;
use doa_core::estimate::{run_method, Method, MethodParams};
use doa_core::simulate::generate_snapshots;
use doa_core::{CMat, DoaError, Scenario};

/// Result status of every FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoaStatus {
    Ok = 0,
    NullArgument = 1,
    Utf8Error = 2,
    ConfigError = 3,
    InvalidInput = 4,
    SingularMatrix = 5,
    DegenerateInput = 6,
    IllConditionedManifold = 7,
    EstimationFailed = 8,
    BufferTooSmall = 9,
    InternalPanic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &DoaError) -> DoaStatus {
    match err {
        DoaError::InvalidInput(_) => DoaStatus::InvalidInput,
        DoaError::SingularMatrix(_) => DoaStatus::SingularMatrix,
        DoaError::DegenerateInput(_) => DoaStatus::DegenerateInput,
        DoaError::IllConditionedManifold(_) => DoaStatus::IllConditionedManifold,
        DoaError::EstimationFailure(_) => DoaStatus::EstimationFailed,
        DoaError::Config(_) => DoaStatus::ConfigError,
        DoaError::Io(_) => DoaStatus::ConfigError,
    }
}

fn fail(err: &DoaError) -> DoaStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Run a closure, translating panics into `InternalPanic`.
fn guarded<F: FnOnce() -> DoaStatus>(f: F) -> DoaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            DoaStatus::InternalPanic
        }
    }
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, DoaStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(DoaStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        DoaStatus::Utf8Error
    })
}

/// Opaque scenario handle.
pub struct DoaScenario {
    inner: Scenario,
}

/// Opaque snapshot-matrix handle. Carries the source count of the scenario
/// that produced it (0 when constructed from raw data), which estimators use
/// as the default `k_sources`.
pub struct DoaSnapshots {
    inner: SnapshotMatrix,
    scenario_k: usize,
}

/// Last error message of the current thread; valid until the next failing
/// call on this thread. Never null.
#[no_mangle]
pub extern "C" fn doa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn doa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parse a scenario from the JSON config used by the CLI
/// (`{"geometry": {...}, "sources": {...}, "snr_db": ..., "n_snapshots": ...,
/// "seed": ...}`). Returns null on error and sets `status`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `status` may be null.
#[no_mangle]
pub unsafe extern "C" fn doa_scenario_from_json(
    json: *const c_char,
    status: *mut DoaStatus,
) -> *mut DoaScenario {
    let mut out: *mut DoaScenario = ptr::null_mut();
    let code = guarded(|| {
        let text = match cstr(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let config: doa_core::cli::RunConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => {
                set_error(&format!("config: {e}"));
                return DoaStatus::ConfigError;
            }
        };
        match config.scenario() {
            Ok(inner) => {
                out = Box::into_raw(Box::new(DoaScenario { inner }));
                DoaStatus::Ok
            }
            Err(e) => fail(&e),
        }
    });
    if !status.is_null() {
        *status = code;
    }
    out
}

/// Free a scenario handle; accepts null.
///
/// # Safety
/// `scenario` must come from [`doa_scenario_from_json`] and not be freed
/// twice.
#[no_mangle]
pub unsafe extern "C" fn doa_scenario_free(scenario: *mut DoaScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Simulate the scenario's snapshot matrix. Returns null on error.
///
/// # Safety
/// `scenario` must be a valid handle; `status` may be null.
#[no_mangle]
pub unsafe extern "C" fn doa_scenario_simulate(
    scenario: *const DoaScenario,
    status: *mut DoaStatus,
) -> *mut DoaSnapshots {
    let mut out: *mut DoaSnapshots = ptr::null_mut();
    let code = guarded(|| {
        if scenario.is_null() {
            set_error("null scenario");
            return DoaStatus::NullArgument;
        }
        let scenario = &(*scenario).inner;
        let inner = generate_snapshots(scenario);
        out = Box::into_raw(Box::new(DoaSnapshots {
            inner,
            scenario_k: scenario.k_sources(),
        }));
        DoaStatus::Ok
    });
    if !status.is_null() {
        *status = code;
    }
    out
}

/// Wrap caller-provided data as a snapshot matrix. `data` holds `m*n`
/// row-major complex entries as interleaved (re, im) doubles; `spacing` is
/// the element spacing in wavelengths.
///
/// # Safety
/// `data` must point to `2*m*n` doubles; `status` may be null.
#[no_mangle]
pub unsafe extern "C" fn doa_snapshots_from_data(
    m: usize,
    n: usize,
    spacing: f64,
    data: *const f64,
    status: *mut DoaStatus,
) -> *mut DoaSnapshots {
    let mut out: *mut DoaSnapshots = ptr::null_mut();
    let code = guarded(|| {
        if data.is_null() {
            set_error("null data pointer");
            return DoaStatus::NullArgument;
        }
        let geometry = match ArrayGeometry::new(m, spacing) {
            Ok(g) => g,
            Err(e) => return fail(&e),
        };
        let slice = std::slice::from_raw_parts(data, 2 * m * n);
        let mut matrix = CMat::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                let at = 2 * (i * n + j);
                matrix[(i, j)] = num_complex::Complex64::new(slice[at], slice[at + 1]);
            }
        }
        match SnapshotMatrix::new(matrix, geometry) {
            Ok(inner) => {
                out = Box::into_raw(Box::new(DoaSnapshots {
                    inner,
                    scenario_k: 0,
                }));
                DoaStatus::Ok
            }
            Err(e) => fail(&e),
        }
    });
    if !status.is_null() {
        *status = code;
    }
    out
}

/// Free a snapshot handle; accepts null.
///
/// # Safety
/// `snapshots` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn doa_snapshots_free(snapshots: *mut DoaSnapshots) {
    if !snapshots.is_null() {
        drop(Box::from_raw(snapshots));
    }
}

/// Dimensions of a snapshot matrix.
///
/// # Safety
/// All pointers must be valid or null (null `snapshots` is an error).
#[no_mangle]
pub unsafe extern "C" fn doa_snapshots_dims(
    snapshots: *const DoaSnapshots,
    m_out: *mut usize,
    n_out: *mut usize,
) -> DoaStatus {
    guarded(|| {
        if snapshots.is_null() || m_out.is_null() || n_out.is_null() {
            set_error("null argument");
            return DoaStatus::NullArgument;
        }
        let data = (*snapshots).inner.data();
        *m_out = data.nrows();
        *n_out = data.ncols();
        DoaStatus::Ok
    })
}

/// Copy the snapshot matrix out as row-major interleaved (re, im) doubles.
/// `cap` is the capacity of `out` in doubles and must be at least `2*m*n`.
///
/// # Safety
/// `out` must point to at least `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn doa_snapshots_copy_data(
    snapshots: *const DoaSnapshots,
    out: *mut f64,
    cap: usize,
) -> DoaStatus {
    guarded(|| {
        if snapshots.is_null() || out.is_null() {
            set_error("null argument");
            return DoaStatus::NullArgument;
        }
        let data = (*snapshots).inner.data();
        let needed = 2 * data.nrows() * data.ncols();
        if cap < needed {
            set_error(&format!("buffer holds {cap} doubles, need {needed}"));
            return DoaStatus::BufferTooSmall;
        }
        let slice = std::slice::from_raw_parts_mut(out, needed);
        for i in 0..data.nrows() {
            for j in 0..data.ncols() {
                let at = 2 * (i * data.ncols() + j);
                slice[at] = data[(i, j)].re;
                slice[at + 1] = data[(i, j)].im;
            }
        }
        DoaStatus::Ok
    })
}

fn parse_params(params_json: *const c_char) -> Result<MethodParams, DoaStatus> {
    if params_json.is_null() {
        return Ok(MethodParams::default());
    }
    let text = unsafe { cstr(params_json)? };
    if text.trim().is_empty() {
        return Ok(MethodParams::default());
    }
    serde_json::from_str(text).map_err(|e| {
        set_error(&format!("method params: {e}"));
        DoaStatus::ConfigError
    })
}

fn run_ffi_estimate(
    snapshots: &DoaSnapshots,
    method: &str,
    params_json: *const c_char,
) -> Result<(Method, doa_core::DoaEstimate), DoaStatus> {
    let method: Method = method.parse().map_err(|e: DoaError| fail(&e))?;
    let params = parse_params(params_json)?;
    let k = params
        .resolve_k(&snapshots.inner, snapshots.scenario_k)
        .map_err(|e| fail(&e))?;
    let estimate = run_method(&snapshots.inner, method, k, &params).map_err(|e| fail(&e))?;
    Ok((method, estimate))
}

/// Run an estimator and copy the sorted angles (degrees) into `out_angles`.
/// `params_json` is an optional `method_params` object (`k_sources`, `tol`,
/// …); pass null for defaults. `out_len` receives the number of angles
/// produced, which may be smaller than the requested source count when the
/// method could not resolve every source.
///
/// # Safety
/// `out_angles` must point to at least `cap` writable doubles; `out_len`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn doa_estimate(
    snapshots: *const DoaSnapshots,
    method: *const c_char,
    params_json: *const c_char,
    out_angles: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> DoaStatus {
    guarded(|| {
        if snapshots.is_null() || out_angles.is_null() || out_len.is_null() {
            set_error("null argument");
            return DoaStatus::NullArgument;
        }
        let method = match cstr(method) {
            Ok(m) => m,
            Err(s) => return s,
        };
        let (_, estimate) = match run_ffi_estimate(&*snapshots, method, params_json) {
            Ok(r) => r,
            Err(s) => return s,
        };
        if estimate.angles_deg.len() > cap {
            set_error(&format!(
                "buffer holds {cap} angles, need {}",
                estimate.angles_deg.len()
            ));
            return DoaStatus::BufferTooSmall;
        }
        let out = std::slice::from_raw_parts_mut(out_angles, estimate.angles_deg.len());
        out.copy_from_slice(&estimate.angles_deg);
        *out_len = estimate.angles_deg.len();
        DoaStatus::Ok
    })
}

/// Run an estimator and return the full result as a JSON string
/// (`{"method": ..., "angles_deg": [...], "diagnostics": {...}}`), exactly
/// the CLI's stdout format. Free the string with [`doa_string_free`].
/// Returns null on error.
///
/// # Safety
/// Pointer arguments as in [`doa_estimate`]; `status` may be null.
#[no_mangle]
pub unsafe extern "C" fn doa_estimate_json(
    snapshots: *const DoaSnapshots,
    method: *const c_char,
    params_json: *const c_char,
    status: *mut DoaStatus,
) -> *mut c_char {
    let mut out: *mut c_char = ptr::null_mut();
    let code = guarded(|| {
        if snapshots.is_null() {
            set_error("null snapshots");
            return DoaStatus::NullArgument;
        }
        let method = match cstr(method) {
            Ok(m) => m,
            Err(s) => return s,
        };
        let (method, estimate) = match run_ffi_estimate(&*snapshots, method, params_json) {
            Ok(r) => r,
            Err(s) => return s,
        };
        match estimate_json(method, &estimate) {
            Ok(json) => match CString::new(json) {
                Ok(c) => {
                    out = c.into_raw();
                    DoaStatus::Ok
                }
                Err(_) => {
                    set_error("estimate JSON contained an interior NUL");
                    DoaStatus::InternalPanic
                }
            },
            Err(e) => fail(&e),
        }
    });
    if !status.is_null() {
        *status = code;
    }
    out
}

/// Free a string returned by this library; accepts null.
///
/// # Safety
/// `s` must come from [`doa_estimate_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn doa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
