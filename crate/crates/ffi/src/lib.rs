//! C ABI over the `oversight` crate.
//!
//! Datasets and models are opaque handles created by `ov_dataset_bundled`,
//! `ov_dataset_load_csv` and `ov_model_fit` and released with the matching
//! `*_free`. Every fallible
//! function returns an [`OvStatus`]; on failure the message is available from
//! [`ov_last_error_message`] on the same thread until the next failing call.
//! Output arrays are caller-allocated with explicit capacities.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use oversight::dataset::{bundled_housing, load_csv, standardize, Dataset};
use oversight::fairglm::{fit, FairGlmModel, FitOptions, ValueWeights};
use oversight::pdm::{apply_epsilon_budget, deviation_fraction};
use oversight::selection::{build_observation2_instance, naive_select, robust_select};
use oversight::values::{accuracy, rho_decision};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Output buffer smaller than required.
    BufferTooSmall = 3,
    Dataset = 4,
    Fit = 5,
    Policy = 6,
    Selection = 7,
    Values = 8,
    /// A Rust panic was caught at the boundary.
    Internal = 9,
}

/// Opaque standardized dataset.
pub struct OvDataset(Dataset);

/// Opaque fitted model.
pub struct OvModel(FairGlmModel);

/// Solver settings; obtain defaults from [`ov_fit_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OvFitOptions {
    pub max_iters: usize,
    pub tolerance: f64,
    pub ridge: f64,
    pub seed: u64,
}

/// Summary of the constructed naive-vs-robust selection instance.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OvObservation2 {
    /// Number of rows actually used (raised to `ceil(2/delta)` if smaller).
    pub n: usize,
    pub budget: usize,
    pub accuracy_a1: f64,
    pub accuracy_a2: f64,
    /// Accuracy of `A2` after the overseer spends its budget.
    pub accuracy_a2_corrected: f64,
    /// 0 for `A1`, 1 for `A2`.
    pub naive_winner: usize,
    pub robust_winner: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: OvStatus, msg: impl ToString) -> OvStatus {
    set_error(msg.to_string());
    status
}

fn guard(f: impl FnOnce() -> OvStatus) -> OvStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(OvStatus::Internal, "panic in oversight"))
}

unsafe fn opt_str<'a>(p: *const c_char) -> Result<Option<&'a str>, OvStatus> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| fail(OvStatus::InvalidArgument, "string is not valid UTF-8"))
}

unsafe fn input<'a, T>(p: *const T, len: usize) -> Result<&'a [T], OvStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(OvStatus::NullPointer, "null input array"));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, capacity: usize, needed: usize) -> Result<&'a mut [T], OvStatus> {
    if capacity < needed {
        return Err(fail(
            OvStatus::BufferTooSmall,
            format!("buffer holds {capacity}, need {needed}"),
        ));
    }
    if needed > 0 && p.is_null() {
        return Err(fail(OvStatus::NullPointer, "null output array"));
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    Ok(slice::from_raw_parts_mut(p, needed))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, OvStatus> {
    p.as_ref().ok_or_else(|| fail(OvStatus::NullPointer, "null handle"))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Last error message of this thread; empty when none. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn ov_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Bundled housing table, target `MEDV`, sensitive `B,TAX`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ov_dataset_bundled(out: *mut *mut OvDataset) -> OvStatus {
    guard(|| {
        if out.is_null() {
            return fail(OvStatus::NullPointer, "null out");
        }
        match standardize(&bundled_housing()) {
            Ok(d) => {
                *out = Box::into_raw(Box::new(OvDataset(d)));
                OvStatus::Ok
            }
            Err(e) => fail(OvStatus::Dataset, e),
        }
    })
}

/// Loads a CSV file; `sensitive` is a comma-separated column list.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_dataset_load_csv(
    path: *const c_char,
    target: *const c_char,
    sensitive: *const c_char,
    out: *mut *mut OvDataset,
) -> OvStatus {
    guard(|| {
        if out.is_null() {
            return fail(OvStatus::NullPointer, "null out");
        }
        let (Some(path), Some(target)) = (try_status!(opt_str(path)), try_status!(opt_str(target))) else {
            return fail(OvStatus::NullPointer, "path and target are required");
        };
        let sensitive: Vec<&str> = try_status!(opt_str(sensitive))
            .unwrap_or("")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        match load_csv(path, target, &sensitive).and_then(|t| standardize(&t)) {
            Ok(d) => {
                *out = Box::into_raw(Box::new(OvDataset(d)));
                OvStatus::Ok
            }
            Err(e) => fail(OvStatus::Dataset, e),
        }
    })
}

/// # Safety
/// `ds` must come from a dataset constructor and not be freed already.
#[no_mangle]
pub unsafe extern "C" fn ov_dataset_free(ds: *mut OvDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Rows, features and sensitive attributes.
///
/// # Safety
/// `ds` must be a live handle; out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn ov_dataset_dims(
    ds: *const OvDataset,
    n: *mut usize,
    d: *mut usize,
    m: *mut usize,
) -> OvStatus {
    guard(|| {
        let ds = &try_status!(handle(ds)).0;
        for (p, v) in [(n, ds.n()), (d, ds.d()), (m, ds.sensitive.len())] {
            if !p.is_null() {
                *p = v;
            }
        }
        OvStatus::Ok
    })
}

/// Binary labels (`n` entries).
///
/// # Safety
/// `ds` must be a live handle; `out` must hold `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn ov_dataset_labels(ds: *const OvDataset, out: *mut u8, capacity: usize) -> OvStatus {
    guard(|| {
        let ds = &try_status!(handle(ds)).0;
        try_status!(output(out, capacity, ds.n())).copy_from_slice(&ds.y);
        OvStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn ov_fit_options_default() -> OvFitOptions {
    let o = FitOptions::default();
    OvFitOptions {
        max_iters: o.max_iters,
        tolerance: o.tolerance,
        ridge: o.ridge,
        seed: o.seed,
    }
}

/// Fits with one weight per sensitive attribute. `opts` may be null for
/// defaults.
///
/// # Safety
/// `ds` must be live, `weights` must hold `n_weights` values and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_model_fit(
    ds: *const OvDataset,
    weights: *const f64,
    n_weights: usize,
    opts: *const OvFitOptions,
    out: *mut *mut OvModel,
) -> OvStatus {
    guard(|| {
        let ds = &try_status!(handle(ds)).0;
        if out.is_null() {
            return fail(OvStatus::NullPointer, "null out");
        }
        let w = match ValueWeights::new(try_status!(input(weights, n_weights)).to_vec()) {
            Ok(w) => w,
            Err(e) => return fail(OvStatus::InvalidArgument, e),
        };
        let mut options = FitOptions::default();
        if let Some(o) = opts.as_ref() {
            options.max_iters = o.max_iters;
            options.tolerance = o.tolerance;
            options.ridge = o.ridge;
            options.seed = o.seed;
        }
        match fit(ds, &w, &options) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(OvModel(m)));
                OvStatus::Ok
            }
            Err(e) => fail(OvStatus::Fit, e),
        }
    })
}

/// # Safety
/// `model` must come from [`ov_model_fit`] and not be freed already.
#[no_mangle]
pub unsafe extern "C" fn ov_model_free(model: *mut OvModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Coefficients on standardized features followed by the intercept
/// (`d + 1` values). `len` receives the count even when the buffer is short.
///
/// # Safety
/// `model` must be live; `out` must hold `capacity` doubles; `len` may be null.
#[no_mangle]
pub unsafe extern "C" fn ov_model_theta(
    model: *const OvModel,
    out: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> OvStatus {
    guard(|| {
        let theta = &try_status!(handle(model)).0.theta;
        if !len.is_null() {
            *len = theta.len();
        }
        try_status!(output(out, capacity, theta.len())).copy_from_slice(theta);
        OvStatus::Ok
    })
}

/// Objective value reached by the solver.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_model_objective(model: *const OvModel, out: *mut f64) -> OvStatus {
    guard(|| {
        let m = &try_status!(handle(model)).0;
        if out.is_null() {
            return fail(OvStatus::NullPointer, "null out");
        }
        *out = m.fit_info.objective;
        OvStatus::Ok
    })
}

/// Scores `θᵀx + b` for every row of `ds`.
///
/// # Safety
/// Handles must be live; `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ov_model_scores(
    model: *const OvModel,
    ds: *const OvDataset,
    out: *mut f64,
    capacity: usize,
) -> OvStatus {
    guard(|| {
        let (m, ds) = (&try_status!(handle(model)).0, &try_status!(handle(ds)).0);
        let buf = try_status!(output(out, capacity, ds.n()));
        match m.scores(ds) {
            Ok(s) => {
                buf.copy_from_slice(&s);
                OvStatus::Ok
            }
            Err(e) => fail(OvStatus::Fit, e),
        }
    })
}

/// Recommended decisions (score ≥ 0) for every row of `ds`.
///
/// # Safety
/// Handles must be live; `out` must hold `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn ov_model_decisions(
    model: *const OvModel,
    ds: *const OvDataset,
    out: *mut u8,
    capacity: usize,
) -> OvStatus {
    guard(|| {
        let (m, ds) = (&try_status!(handle(model)).0, &try_status!(handle(ds)).0);
        let buf = try_status!(output(out, capacity, ds.n()));
        match m.decisions(ds) {
            Ok(d) => {
                buf.copy_from_slice(&d);
                OvStatus::Ok
            }
            Err(e) => fail(OvStatus::Fit, e),
        }
    })
}

/// Covariance statistic of feature `attr_index` with `decisions` (`n` bytes).
///
/// # Safety
/// `ds` must be live; `decisions` must hold `n` bytes; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_rho_decision(
    ds: *const OvDataset,
    decisions: *const u8,
    n: usize,
    attr_index: usize,
    out: *mut f64,
) -> OvStatus {
    guard(|| {
        let ds = &try_status!(handle(ds)).0;
        let dec = try_status!(input(decisions, n));
        if out.is_null() {
            return fail(OvStatus::NullPointer, "null out");
        }
        if attr_index >= ds.d() {
            return fail(OvStatus::InvalidArgument, format!("attribute index {attr_index} out of range"));
        }
        match rho_decision(ds, dec, attr_index) {
            Ok(r) => {
                *out = r;
                OvStatus::Ok
            }
            Err(e) => fail(OvStatus::Values, e),
        }
    })
}

/// Share of `decisions` equal to `labels`.
///
/// # Safety
/// Both arrays must hold `n` bytes; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_accuracy(decisions: *const u8, labels: *const u8, n: usize, out: *mut f64) -> OvStatus {
    guard(|| {
        let (d, l) = (try_status!(input(decisions, n)), try_status!(input(labels, n)));
        if out.is_null() {
            return fail(OvStatus::NullPointer, "null out");
        }
        match accuracy(d, l) {
            Ok(a) => {
                *out = a;
                OvStatus::Ok
            }
            Err(e) => fail(OvStatus::Values, e),
        }
    })
}

/// Overrides at most `floor(epsilon·n)` recommendations toward `target`.
///
/// # Safety
/// `recommended` and `target` must hold `n` bytes; `out` must hold
/// `capacity` bytes; `overrides` may be null.
#[no_mangle]
pub unsafe extern "C" fn ov_apply_epsilon_budget(
    recommended: *const u8,
    target: *const u8,
    n: usize,
    epsilon: f64,
    out: *mut u8,
    capacity: usize,
    overrides: *mut usize,
) -> OvStatus {
    guard(|| {
        let (r, t) = (try_status!(input(recommended, n)), try_status!(input(target, n)));
        let buf = try_status!(output(out, capacity, n));
        match apply_epsilon_budget(r, t, epsilon) {
            Ok(a) => {
                buf.copy_from_slice(&a.decisions);
                if !overrides.is_null() {
                    *overrides = a.overrides;
                }
                OvStatus::Ok
            }
            Err(e) => fail(OvStatus::Policy, e),
        }
    })
}

/// Normalized Hamming distance of two decision vectors.
///
/// # Safety
/// Both arrays must hold `n` bytes; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ov_deviation_fraction(a: *const u8, b: *const u8, n: usize, out: *mut f64) -> OvStatus {
    guard(|| {
        let (a, b) = (try_status!(input(a, n)), try_status!(input(b, n)));
        if out.is_null() {
            return fail(OvStatus::NullPointer, "null out");
        }
        match deviation_fraction(a, b) {
            Ok(v) => {
                *out = v;
                OvStatus::Ok
            }
            Err(e) => fail(OvStatus::Policy, e),
        }
    })
}

/// Builds the two-candidate instance where an ε-budget overseer reverses
/// the naive choice, and reports both winners.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ov_observation2(n: usize, epsilon: f64, delta: f64, out: *mut OvObservation2) -> OvStatus {
    guard(|| {
        if out.is_null() {
            return fail(OvStatus::NullPointer, "null out");
        }
        let inst = match build_observation2_instance(n, epsilon, delta) {
            Ok(i) => i,
            Err(e) => return fail(OvStatus::InvalidArgument, e),
        };
        let w = inst.weights();
        let run = || -> Result<OvObservation2, String> {
            let naive = naive_select(&inst.candidates, &w, &inst.data).map_err(|e| e.to_string())?;
            let robust =
                robust_select(&inst.candidates, &inst.policies, &w, &inst.data).map_err(|e| e.to_string())?;
            let labels = &inst.candidates.labels;
            let acc = |i: usize| accuracy(&inst.candidates.candidates[i].decisions, labels).map_err(|e| e.to_string());
            Ok(OvObservation2 {
                n: inst.n(),
                budget: inst.budget,
                accuracy_a1: acc(0)?,
                accuracy_a2: acc(1)?,
                accuracy_a2_corrected: robust.worst_case[1],
                naive_winner: naive,
                robust_winner: robust.winner,
            })
        };
        match run() {
            Ok(v) => {
                *out = v;
                OvStatus::Ok
            }
            Err(e) => fail(OvStatus::Selection, e),
        }
    })
}
