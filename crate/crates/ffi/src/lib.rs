//! C ABI over the poolalloc engine.
//!
//! Scenarios and frontiers are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! a [`PaStatus`]; on failure [`pa_last_error`] describes the cause for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use poolalloc::frontier::{
    pareto_frontier_with, target_count_from_exact, FrontierOptions, FrontierResult, TargetParams,
};
use poolalloc::{evaluate, FrontierError, ModelError, Scenario, Strategy};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON or a scenario that breaks an invariant.
    InvalidInput = 3,
    /// The strategy is infeasible for the scenario.
    Infeasible = 4,
    /// More feasible strategies than the requested cap.
    CapExceeded = 5,
    IndexOutOfRange = 6,
    Panic = 7,
}

/// Opaque scenario handle.
pub struct PaScenario(Scenario);

/// Opaque frontier handle.
pub struct PaFrontier(FrontierResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: PaStatus, msg: impl Into<String>) -> PaStatus {
    set_error(msg);
    status
}

fn guarded(f: impl FnOnce() -> PaStatus) -> PaStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(PaStatus::Panic, "internal panic"),
    }
}

fn model_status(e: &ModelError) -> PaStatus {
    match e {
        ModelError::Infeasible(_) => PaStatus::Infeasible,
        _ => PaStatus::InvalidInput,
    }
}

fn frontier_status(e: &FrontierError) -> PaStatus {
    match e {
        FrontierError::TooManyStrategies { .. } => PaStatus::CapExceeded,
        FrontierError::Infeasible { .. } => PaStatus::Infeasible,
        FrontierError::Model(m) => model_status(m),
        _ => PaStatus::InvalidInput,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a scenario from NUL-terminated JSON.
///
/// # Safety
/// `json` must be NULL or a valid NUL-terminated string; `out` must be NULL
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn pa_scenario_from_json(json: *const c_char, out: *mut *mut PaScenario) -> PaStatus {
    guarded(|| {
        if json.is_null() || out.is_null() {
            return fail(PaStatus::NullPointer, "null argument");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(PaStatus::InvalidUtf8, "scenario json is not UTF-8");
        };
        match Scenario::from_json(text) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(PaScenario(s)));
                PaStatus::Ok
            }
            Err(e) => fail(PaStatus::InvalidInput, e.to_string()),
        }
    })
}

/// # Safety
/// `scenario` must be NULL or a handle from [`pa_scenario_from_json`] not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn pa_scenario_free(scenario: *mut PaScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of categories, or 0 for NULL.
///
/// # Safety
/// `scenario` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pa_scenario_categories(scenario: *const PaScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.k())
}

/// Evaluates the strategy `(t, g)` of length `k`. Writes the health
/// objective to `health` and the `k` quarantine objectives to `quarantine`.
///
/// # Safety
/// `t` and `g` must point to `k` readable values, `quarantine` to `k`
/// writable values and `health` to one.
#[no_mangle]
pub unsafe extern "C" fn pa_evaluate(
    scenario: *const PaScenario,
    t: *const u32,
    g: *const u32,
    k: usize,
    health: *mut f64,
    quarantine: *mut f64,
) -> PaStatus {
    guarded(|| {
        let Some(s) = scenario.as_ref() else {
            return fail(PaStatus::NullPointer, "null scenario");
        };
        if t.is_null() || g.is_null() || health.is_null() || quarantine.is_null() {
            return fail(PaStatus::NullPointer, "null argument");
        }
        let strategy = Strategy::new(
            std::slice::from_raw_parts(t, k).to_vec(),
            std::slice::from_raw_parts(g, k).to_vec(),
        );
        match evaluate(&s.0, &strategy) {
            Ok(o) => {
                *health = o.health;
                std::slice::from_raw_parts_mut(quarantine, k).copy_from_slice(&o.quarantine);
                PaStatus::Ok
            }
            Err(e) => fail(model_status(&e), e.to_string()),
        }
    })
}

/// Computes the exact frontier (`desired == 0`) or a bucketed frontier of
/// about `desired` solutions. `cap == 0` means no cap.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pa_frontier_compute(
    scenario: *const PaScenario,
    desired: usize,
    seed: u64,
    cap: u64,
    out: *mut *mut PaFrontier,
) -> PaStatus {
    guarded(|| {
        let Some(s) = scenario.as_ref() else {
            return fail(PaStatus::NullPointer, "null scenario");
        };
        if out.is_null() {
            return fail(PaStatus::NullPointer, "null output");
        }
        let options = FrontierOptions { cap: (cap > 0).then_some(cap), ..FrontierOptions::default() };
        let result = pareto_frontier_with(&s.0, &options).and_then(|exact| {
            if desired == 0 {
                Ok(FrontierResult { seed, ..exact })
            } else {
                target_count_from_exact(&exact, TargetParams::new(desired, seed)).map(|(_, r)| r)
            }
        });
        match result {
            Ok(r) => {
                *out = Box::into_raw(Box::new(PaFrontier(r)));
                PaStatus::Ok
            }
            Err(e) => fail(frontier_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `frontier` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pa_frontier_len(frontier: *const PaFrontier) -> usize {
    frontier.as_ref().map_or(0, |f| f.0.len())
}

/// Copies solution `index`: its id, health objective, and `k` values each of
/// `t`, `g` and `quarantine`.
///
/// # Safety
/// Output pointers must be writable for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn pa_frontier_get(
    frontier: *const PaFrontier,
    index: usize,
    k: usize,
    id: *mut u64,
    health: *mut f64,
    t: *mut u32,
    g: *mut u32,
    quarantine: *mut f64,
) -> PaStatus {
    guarded(|| {
        let Some(f) = frontier.as_ref() else {
            return fail(PaStatus::NullPointer, "null frontier");
        };
        if id.is_null() || health.is_null() || t.is_null() || g.is_null() || quarantine.is_null() {
            return fail(PaStatus::NullPointer, "null argument");
        }
        let Some(e) = f.0.solutions.get(index) else {
            return fail(PaStatus::IndexOutOfRange, format!("index {index} out of range"));
        };
        if e.strategy.k() != k {
            return fail(PaStatus::InvalidInput, format!("solution has {} categories, not {k}", e.strategy.k()));
        }
        *id = e.id;
        *health = e.objectives.health;
        std::slice::from_raw_parts_mut(t, k).copy_from_slice(&e.strategy.t);
        std::slice::from_raw_parts_mut(g, k).copy_from_slice(&e.strategy.g);
        std::slice::from_raw_parts_mut(quarantine, k).copy_from_slice(&e.objectives.quarantine);
        PaStatus::Ok
    })
}

/// Frontier as JSON; release with [`pa_string_free`]. NULL on failure.
///
/// # Safety
/// `frontier` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pa_frontier_to_json(frontier: *const PaFrontier) -> *mut c_char {
    clear_error();
    let Some(f) = frontier.as_ref() else {
        set_error("null frontier");
        return ptr::null_mut();
    };
    CString::new(f.0.to_json()).map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `frontier` must be NULL or a handle from [`pa_frontier_compute`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn pa_frontier_free(frontier: *mut PaFrontier) {
    if !frontier.is_null() {
        drop(Box::from_raw(frontier));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
