//! C ABI over the delaydist library.
//!
//! Conventions:
//! * opaque handles (`DdistLinelist`, `DdistFit`) owned by the library,
//!   released with the matching `_free` function;
//! * every fallible call returns a [`DdistStatus`] and writes results through
//!   out-pointers; on failure a thread-local message is readable via
//!   [`ddist_last_error`] until the next call on that thread;
//! * strings returned through out-pointers are NUL-terminated, owned by the
//!   caller and released with [`ddist_string_free`];
//! * structured inputs (scenarios, fit options, report options) cross the
//!   boundary as JSON, mirroring the CLI's config files.
//!
//! Panics are caught at the boundary and reported as `DDIST_STATUS_PANIC`.

use delaydist::inference::{
    compare_models, decide_adjustments, fit_mcmc, fit_mle, AdjustmentSet, DecisionContext,
    FitDocument, FitMethod, FitOptions, FitResult, PrimaryPrior,
};
use delaydist::linelist::{
    epidemic_curve, estimate_growth_rate, ingest_csv_reader, CohortDirection, CurveEvent,
    Linelist, LinelistMeta,
};
use delaydist::reporting::{build_report, render_json, render_markdown, ReportConfig};
use delaydist::synthdata::{simulate_linelist, OutbreakScenario};
use libc::{c_char, c_double, c_int, size_t};
use serde::Deserialize;
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdistStatus {
    Ok = 0,
    /// Invalid input: malformed JSON/CSV, bad parameters, broken invariants.
    InvalidInput = 2,
    /// The operation finished but the result carries nonconvergence flags.
    NotConverged = 3,
    NullPointer = 4,
    /// A caller-supplied string is not valid UTF-8.
    InvalidUtf8 = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

/// Opaque linelist handle.
pub struct DdistLinelist {
    inner: Linelist,
}

/// Opaque fit handle.
pub struct DdistFit {
    inner: FitResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = Some(CString::new(text).expect("NULs stripped"));
    });
}

fn clear_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
}

/// Message for the most recent failure on this thread, or NULL.
///
/// The pointer stays valid until the next `ddist_*` call on the thread.
#[no_mangle]
pub extern "C" fn ddist_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ddist_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Frees a string returned through an out-pointer.
///
/// # Safety
/// `s` must be a pointer previously returned by this library (or NULL).
#[no_mangle]
pub unsafe extern "C" fn ddist_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn read_utf8<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, DdistStatus> {
    if ptr.is_null() {
        set_error(format!("{what} is NULL"));
        return Err(DdistStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        DdistStatus::InvalidUtf8
    })
}

fn give_string(text: String, out: *mut *mut c_char) -> DdistStatus {
    let c = match CString::new(text) {
        Ok(c) => c,
        Err(_) => {
            set_error("output contained an interior NUL");
            return DdistStatus::Panic;
        }
    };
    unsafe { *out = c.into_raw() };
    DdistStatus::Ok
}

fn guarded<F: FnOnce() -> DdistStatus>(f: F) -> DdistStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic with non-string payload".into());
            set_error(format!("internal panic: {msg}"));
            DdistStatus::Panic
        }
    }
}

// --- linelists ---------------------------------------------------------------

/// Parses a linelist from CSV text plus sidecar-metadata JSON
/// (`meta_json` may be NULL for defaults).
///
/// # Safety
/// `csv_text` (and `meta_json` when non-NULL) must be NUL-terminated strings;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ddist_linelist_parse(
    csv_text: *const c_char,
    meta_json: *const c_char,
    out: *mut *mut DdistLinelist,
) -> DdistStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out pointer is NULL");
            return DdistStatus::NullPointer;
        }
        let csv = match read_utf8(csv_text, "csv_text") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let meta = if meta_json.is_null() {
            LinelistMeta::default()
        } else {
            let text = match read_utf8(meta_json, "meta_json") {
                Ok(s) => s,
                Err(status) => return status,
            };
            match serde_json::from_str::<LinelistMeta>(text) {
                Ok(m) => m,
                Err(e) => {
                    set_error(format!("metadata JSON: {e}"));
                    return DdistStatus::InvalidInput;
                }
            }
        };
        match ingest_csv_reader(csv.as_bytes(), &meta) {
            Ok(linelist) => {
                *out = Box::into_raw(Box::new(DdistLinelist { inner: linelist }));
                DdistStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                DdistStatus::InvalidInput
            }
        }
    })
}

/// Simulates a synthetic outbreak from a scenario JSON document; optionally
/// returns the ground-truth CSV through `out_truth_csv` (pass NULL to skip).
///
/// # Safety
/// `scenario_json` must be NUL-terminated; `out` must be valid;
/// `out_truth_csv` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn ddist_simulate(
    scenario_json: *const c_char,
    out: *mut *mut DdistLinelist,
    out_truth_csv: *mut *mut c_char,
) -> DdistStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out pointer is NULL");
            return DdistStatus::NullPointer;
        }
        let text = match read_utf8(scenario_json, "scenario_json") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let scenario: OutbreakScenario = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(e) => {
                set_error(format!("scenario JSON: {e}"));
                return DdistStatus::InvalidInput;
            }
        };
        match simulate_linelist(&scenario) {
            Ok((linelist, truth)) => {
                if !out_truth_csv.is_null() {
                    let mut buf = Vec::new();
                    if let Err(e) = truth.write_csv(&mut buf) {
                        set_error(e.to_string());
                        return DdistStatus::InvalidInput;
                    }
                    let text = String::from_utf8(buf).expect("CSV is UTF-8");
                    let status = give_string(text, out_truth_csv);
                    if status != DdistStatus::Ok {
                        return status;
                    }
                }
                *out = Box::into_raw(Box::new(DdistLinelist { inner: linelist }));
                DdistStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                DdistStatus::InvalidInput
            }
        }
    })
}

/// Number of cases.
///
/// # Safety
/// `linelist` must be a live handle from this library (or NULL, giving 0).
#[no_mangle]
pub unsafe extern "C" fn ddist_linelist_len(linelist: *const DdistLinelist) -> size_t {
    if linelist.is_null() {
        return 0;
    }
    (*linelist).inner.len()
}

/// Releases a linelist handle.
///
/// # Safety
/// `linelist` must be a handle from this library, passed at most once.
#[no_mangle]
pub unsafe extern "C" fn ddist_linelist_free(linelist: *mut DdistLinelist) {
    if !linelist.is_null() {
        drop(Box::from_raw(linelist));
    }
}

// --- fitting -----------------------------------------------------------------

#[derive(Deserialize)]
struct FitConfig {
    family: delaydist::distributions::FamilyKind,
    /// e.g. "censoring", "censoring,truncation", "censoring,dynamical:0.2"
    adjust: String,
    #[serde(default)]
    options: FitOptions,
}

fn parse_adjust(spec: &str) -> Result<AdjustmentSet, String> {
    let mut truncation = false;
    let mut dynamical = None;
    let mut named = false;
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        named = true;
        if part == "censoring" {
        } else if part == "truncation" {
            truncation = true;
        } else if let Some(rate) = part.strip_prefix("dynamical:") {
            dynamical = Some(rate.parse::<f64>().map_err(|_| format!("bad rate '{rate}'"))?);
        } else {
            return Err(format!("unknown adjustment '{part}'"));
        }
    }
    if !named {
        return Err("empty adjustment spec".into());
    }
    AdjustmentSet::new(truncation, dynamical, PrimaryPrior::Uniform).map_err(|e| e.to_string())
}

/// Fits a delay distribution. `config_json` carries the family, the
/// adjustment spec and optional fit options, mirroring the CLI:
/// `{"family": "lognormal", "adjust": "censoring,truncation", "options": {...}}`.
///
/// Returns `DDIST_STATUS_NOT_CONVERGED` (with a live handle in `out`) when
/// the fit finished but failed its convergence diagnostics.
///
/// # Safety
/// `linelist` must be a live handle; `config_json` NUL-terminated; `out`
/// valid.
#[no_mangle]
pub unsafe extern "C" fn ddist_fit_run(
    linelist: *const DdistLinelist,
    config_json: *const c_char,
    out: *mut *mut DdistFit,
) -> DdistStatus {
    guarded(|| {
        if linelist.is_null() || out.is_null() {
            set_error("linelist or out pointer is NULL");
            return DdistStatus::NullPointer;
        }
        let text = match read_utf8(config_json, "config_json") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let config: FitConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => {
                set_error(format!("fit config JSON: {e}"));
                return DdistStatus::InvalidInput;
            }
        };
        let adj = match parse_adjust(&config.adjust) {
            Ok(a) => a,
            Err(e) => {
                set_error(e);
                return DdistStatus::InvalidInput;
            }
        };
        let data = &(*linelist).inner;
        let outcome = match config.options.method {
            FitMethod::Mle => fit_mle(data, config.family, &adj, &config.options),
            FitMethod::Mcmc => fit_mcmc(data, config.family, &adj, &config.options),
        };
        match outcome {
            Ok(fit) => {
                let converged = fit.diagnostics.converged;
                *out = Box::into_raw(Box::new(DdistFit { inner: fit }));
                if converged {
                    DdistStatus::Ok
                } else {
                    set_error("fit complete but flagged not converged");
                    DdistStatus::NotConverged
                }
            }
            Err(e) => {
                set_error(e.to_string());
                DdistStatus::InvalidInput
            }
        }
    })
}

/// 1 when the fit passed its convergence diagnostics, else 0.
///
/// # Safety
/// `fit` must be a live handle (or NULL, giving 0).
#[no_mangle]
pub unsafe extern "C" fn ddist_fit_converged(fit: *const DdistFit) -> c_int {
    if fit.is_null() {
        return 0;
    }
    (*fit).inner.diagnostics.converged as c_int
}

/// Serializes the fit document (same schema as the CLI's fit.json).
///
/// # Safety
/// `fit` must be a live handle; `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn ddist_fit_document_json(
    fit: *const DdistFit,
    out_json: *mut *mut c_char,
) -> DdistStatus {
    guarded(|| {
        if fit.is_null() || out_json.is_null() {
            set_error("fit or out pointer is NULL");
            return DdistStatus::NullPointer;
        }
        match serde_json::to_string_pretty(&(*fit).inner.document()) {
            Ok(mut text) => {
                text.push('\n');
                give_string(text, out_json)
            }
            Err(e) => {
                set_error(e.to_string());
                DdistStatus::InvalidInput
            }
        }
    })
}

/// Releases a fit handle.
///
/// # Safety
/// `fit` must be a handle from this library, passed at most once.
#[no_mangle]
pub unsafe extern "C" fn ddist_fit_free(fit: *mut DdistFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

// --- model comparison, reports, decision tree --------------------------------

/// Ranks fits (same data, same adjustments, same method) by information
/// criterion; the result is the comparison-table JSON.
///
/// # Safety
/// `fits` must point to `n_fits` live fit handles; `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn ddist_compare(
    fits: *const *const DdistFit,
    n_fits: size_t,
    out_json: *mut *mut c_char,
) -> DdistStatus {
    guarded(|| {
        if fits.is_null() || out_json.is_null() {
            set_error("fits or out pointer is NULL");
            return DdistStatus::NullPointer;
        }
        let mut docs: Vec<FitDocument> = Vec::with_capacity(n_fits);
        for i in 0..n_fits {
            let handle = *fits.add(i);
            if handle.is_null() {
                set_error(format!("fit handle {i} is NULL"));
                return DdistStatus::NullPointer;
            }
            docs.push((*handle).inner.document());
        }
        match compare_models(&docs) {
            Ok(table) => match serde_json::to_string_pretty(&table) {
                Ok(mut text) => {
                    text.push('\n');
                    give_string(text, out_json)
                }
                Err(e) => {
                    set_error(e.to_string());
                    DdistStatus::InvalidInput
                }
            },
            Err(e) => {
                set_error(e.to_string());
                DdistStatus::InvalidInput
            }
        }
    })
}

/// Builds the reporting-checklist document for a fit over its linelist.
///
/// `report_config_json` may be NULL for an empty config; otherwise it is the
/// JSON form of the report options (unadjusted summary, comparison table,
/// narrative notes, data-export reference). The epidemic curve and growth
/// rate are computed from the linelist unless `include_curve` is 0.
/// `as_markdown` selects the output format (1 markdown, 0 JSON).
///
/// # Safety
/// `fit` and `linelist` must be live handles; `report_config_json` may be
/// NULL; `out_text` valid.
#[no_mangle]
pub unsafe extern "C" fn ddist_report(
    fit: *const DdistFit,
    linelist: *const DdistLinelist,
    report_config_json: *const c_char,
    include_curve: c_int,
    as_markdown: c_int,
    out_text: *mut *mut c_char,
) -> DdistStatus {
    guarded(|| {
        if fit.is_null() || linelist.is_null() || out_text.is_null() {
            set_error("fit, linelist or out pointer is NULL");
            return DdistStatus::NullPointer;
        }
        let config: ReportConfig = if report_config_json.is_null() {
            ReportConfig::default()
        } else {
            let text = match read_utf8(report_config_json, "report_config_json") {
                Ok(s) => s,
                Err(status) => return status,
            };
            match serde_json::from_str(text) {
                Ok(c) => c,
                Err(e) => {
                    set_error(format!("report config JSON: {e}"));
                    return DdistStatus::InvalidInput;
                }
            }
        };
        let data = &(*linelist).inner;
        let (curve, growth) = if include_curve != 0 {
            match epidemic_curve(data, CurveEvent::Primary) {
                Ok(curve) => {
                    let window = (curve.start_day, curve.end_day());
                    let growth = estimate_growth_rate(&curve, window).ok();
                    (Some(curve), growth)
                }
                Err(e) => {
                    set_error(e.to_string());
                    return DdistStatus::InvalidInput;
                }
            }
        } else {
            (None, None)
        };
        match build_report(&(*fit).inner.document(), data, curve.as_ref(), growth, &config) {
            Ok(report) => {
                let rendered = if as_markdown != 0 {
                    Ok(render_markdown(&report))
                } else {
                    render_json(&report)
                };
                match rendered {
                    Ok(text) => give_string(text, out_text),
                    Err(e) => {
                        set_error(e.to_string());
                        DdistStatus::InvalidInput
                    }
                }
            }
            Err(e) => {
                set_error(e.to_string());
                DdistStatus::InvalidInput
            }
        }
    })
}

/// Runs the bias-adjustment decision tree. `growth_rate` is read only when
/// `growth_rate_known` is nonzero. The chosen adjustment set is returned as
/// JSON.
///
/// # Safety
/// `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ddist_check_adjustments(
    real_time: c_int,
    backward: c_int,
    growth_rate_known: c_int,
    growth_rate: c_double,
    surveillance_ended_early: c_int,
    out_json: *mut *mut c_char,
) -> DdistStatus {
    guarded(|| {
        if out_json.is_null() {
            set_error("out pointer is NULL");
            return DdistStatus::NullPointer;
        }
        let ctx = DecisionContext {
            real_time: real_time != 0,
            modeling_direction: if backward != 0 {
                CohortDirection::Backward
            } else {
                CohortDirection::Forward
            },
            growth_rate: (growth_rate_known != 0).then_some(growth_rate),
            surveillance_ended_early: surveillance_ended_early != 0,
        };
        match decide_adjustments(&ctx) {
            Ok(adj) => match serde_json::to_string_pretty(&adj) {
                Ok(mut text) => {
                    text.push('\n');
                    give_string(text, out_json)
                }
                Err(e) => {
                    set_error(e.to_string());
                    DdistStatus::InvalidInput
                }
            },
            Err(e) => {
                set_error(e.to_string());
                DdistStatus::InvalidInput
            }
        }
    })
}
