//! C ABI over the `noregret` crate.
//!
//! Every fallible function returns an [`NrStatus`]; results go through out
//! pointers. Objects are opaque handles created by `nr_*_new`/`nr_*_run` and
//! released with the matching `nr_*_free`. The message of the most recent
//! failure on the calling thread is available from [`nr_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use noregret::cli::PendulumSection;
use noregret::control::{self, ControlTraceBundle, Scenario};
use noregret::dynamics;
use noregret::ip::{self, IpQuery, IpTarget, SequenceTrace};
use noregret::regression::{self, RegressionExperimentConfig, RegressionRun};
use noregret::{Error, FeasibleSet};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Dimension = 3,
    NonFinite = 4,
    QueryInfeasible = 5,
    Numerical = 6,
    Config = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrTargetKind {
    /// Distance `|s - value|`.
    Point = 0,
    /// Distance to `[0, value]`.
    Interval = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrScenario {
    TrueModel = 0,
    ZeroModel = 1,
    GpAdaptive = 2,
}

/// Result of [`nr_classical_tail_check`]; index fields are meaningful only when the flag is set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NrTailCheck {
    pub converged: bool,
    pub converged_from: usize,
    pub has_exceedance: bool,
    pub last_exceedance: usize,
}

/// Partial sum plus certified tail of `sum_i ||M^i||`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrSigmaSum {
    pub value: f64,
    pub partial: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

pub struct NrFeasibleSet(FeasibleSet);
pub struct NrTrace(SequenceTrace);
pub struct NrRegressionRun(RegressionRun);
pub struct NrPendulumRun(ControlTraceBundle);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> NrStatus {
    match err {
        Error::Dimension { .. } => NrStatus::Dimension,
        Error::InvalidInput(_) => NrStatus::InvalidInput,
        Error::NonFinite { .. } => NrStatus::NonFinite,
        Error::QueryInfeasible { .. } => NrStatus::QueryInfeasible,
        Error::Numerical { .. } => NrStatus::Numerical,
        Error::Config(_) => NrStatus::Config,
        Error::Io(_) => NrStatus::Io,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
    Buffer { needed: usize, given: usize },
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

type FfiResult = Result<(), Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> NrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NrStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            NrStatus::NullPointer
        }
        Ok(Err(Fail::Buffer { needed, given })) => {
            set_error(format!("output buffer holds {given} values, {needed} needed"));
            NrStatus::BufferTooSmall
        }
        Err(_) => {
            set_error("internal panic".into());
            NrStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn write_values(values: &[f64], dst: *mut f64, capacity: usize) -> FfiResult {
    if capacity < values.len() {
        return Err(Fail::Buffer {
            needed: values.len(),
            given: capacity,
        });
    }
    if values.is_empty() {
        return Ok(());
    }
    if dst.is_null() {
        return Err(Fail::Null("output buffer"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), dst, values.len());
    Ok(())
}

unsafe fn json_arg<T: serde::de::DeserializeOwned + Default>(p: *const c_char) -> Result<T, Fail> {
    if p.is_null() {
        return Ok(T::default());
    }
    let text = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Lib(Error::Config("configuration is not UTF-8".into())))?;
    serde_json::from_str(text).map_err(|e| Fail::Lib(Error::Config(e.to_string())))
}

fn target(kind: NrTargetKind, value: f64) -> IpTarget {
    match kind {
        NrTargetKind::Point => IpTarget::Point(value),
        NrTargetKind::Interval => IpTarget::Interval(value),
    }
}

fn boxed<T>(value: T, dst: *mut *mut T) -> FfiResult {
    if dst.is_null() {
        return Err(Fail::Null("output handle"));
    }
    unsafe { *dst = Box::into_raw(Box::new(value)) };
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies the last error message (NUL-terminated, truncated to `capacity`) and returns its full length.
///
/// # Safety
/// `buf` must be valid for `capacity` bytes, or null with `capacity == 0`.
#[no_mangle]
pub unsafe extern "C" fn nr_last_error_message(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && capacity > 0 {
            let n = msg.len().min(capacity - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `lower` and `upper` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_set_new_box(
    lower: *const f64,
    upper: *const f64,
    dim: usize,
    out: *mut *mut NrFeasibleSet,
) -> NrStatus {
    guard(|| {
        let lo = slice(lower, dim, "lower")?.to_vec();
        let hi = slice(upper, dim, "upper")?.to_vec();
        boxed(NrFeasibleSet(FeasibleSet::new_box(lo, hi)?), out)
    })
}

/// # Safety
/// `center` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_set_new_ball(
    center: *const f64,
    dim: usize,
    radius: f64,
    out: *mut *mut NrFeasibleSet,
) -> NrStatus {
    guard(|| {
        let c = slice(center, dim, "center")?.to_vec();
        boxed(NrFeasibleSet(FeasibleSet::new_ball(c, radius)?), out)
    })
}

/// # Safety
/// `set` must come from `nr_set_new_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nr_set_free(set: *mut NrFeasibleSet) {
    free(set)
}

/// Dimension of the set, 0 for a null handle.
///
/// # Safety
/// `set` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nr_set_dimension(set: *const NrFeasibleSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.dimension())
}

/// Euclidean projection of `point` into `result` (both of length `dim`).
///
/// # Safety
/// `point` and `result` must be valid for `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn nr_set_project(
    set: *const NrFeasibleSet,
    point: *const f64,
    dim: usize,
    result: *mut f64,
) -> NrStatus {
    guard(|| {
        let s = handle(set, "set")?;
        let p = s.0.project(slice(point, dim, "point")?)?;
        write_values(&p, result, dim)
    })
}

/// # Safety
/// `point` must be valid for `dim` doubles; `inside` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_set_contains(
    set: *const NrFeasibleSet,
    point: *const f64,
    dim: usize,
    tol: f64,
    inside: *mut bool,
) -> NrStatus {
    guard(|| {
        let s = handle(set, "set")?;
        *out(inside, "inside")? = s.0.contains(slice(point, dim, "point")?, tol)?;
        Ok(())
    })
}

/// # Safety
/// `values` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_trace_new(values: *const f64, len: usize, out: *mut *mut NrTrace) -> NrStatus {
    guard(|| {
        let v = slice(values, len, "values")?.to_vec();
        boxed(NrTrace(SequenceTrace::new(v)?), out)
    })
}

/// The doubling-gap sequence: 1 at powers of two, `1/t^2` elsewhere.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_trace_power_spikes(len: usize, out: *mut *mut NrTrace) -> NrStatus {
    guard(|| boxed(NrTrace(ip::power_spike_sequence(len)?), out))
}

/// # Safety
/// `trace` must come from `nr_trace_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nr_trace_free(trace: *mut NrTrace) {
    free(trace)
}

/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nr_trace_len(trace: *const NrTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// Smallest `n >= start` with the next `duration` samples within `epsilon` of the target.
/// `found` is false when the trace holds no such window.
///
/// # Safety
/// `found` and `index` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_ip_witness(
    trace: *const NrTrace,
    epsilon: f64,
    duration: usize,
    start: usize,
    target_kind: NrTargetKind,
    target_value: f64,
    found: *mut bool,
    index: *mut usize,
) -> NrStatus {
    guard(|| {
        let t = handle(trace, "trace")?;
        let q = IpQuery::new(epsilon, duration, start, target(target_kind, target_value))?;
        let w = ip::ip_witness(&t.0, &q)?;
        *out(found, "found")? = w.is_some();
        *out(index, "index")? = w.unwrap_or(0);
        Ok(())
    })
}

/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_classical_tail_check(
    trace: *const NrTrace,
    target: f64,
    epsilon: f64,
    result: *mut NrTailCheck,
) -> NrStatus {
    guard(|| {
        let t = handle(trace, "trace")?;
        let c = ip::classical_tail_check(&t.0, target, epsilon)?;
        *out(result, "result")? = NrTailCheck {
            converged: c.converged_from.is_some(),
            converged_from: c.converged_from.unwrap_or(0),
            has_exceedance: c.last_exceedance.is_some(),
            last_exceedance: c.last_exceedance.unwrap_or(0),
        };
        Ok(())
    })
}

/// Running means into `result`, which must hold at least `nr_trace_len` doubles.
///
/// # Safety
/// `result` must be valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn nr_cesaro_averages(trace: *const NrTrace, result: *mut f64, capacity: usize) -> NrStatus {
    guard(|| {
        let t = handle(trace, "trace")?;
        write_values(ip::cesaro_averages(&t.0).values(), result, capacity)
    })
}

/// Spectral radius of the row-major `n x n` matrix.
///
/// # Safety
/// `data` must point to `n * n` doubles; `radius` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_spectral_radius(data: *const f64, n: usize, radius: *mut f64) -> NrStatus {
    guard(|| {
        let m = matrix(data, n)?;
        *out(radius, "radius")? = dynamics::spectral_radius(&m)?;
        Ok(())
    })
}

/// # Safety
/// `data` must point to `n * n` doubles; `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_sigma_sum(data: *const f64, n: usize, tail_tol: f64, result: *mut NrSigmaSum) -> NrStatus {
    guard(|| {
        let m = matrix(data, n)?;
        let s = dynamics::sigma_sum(&m, tail_tol)?;
        *out(result, "result")? = NrSigmaSum {
            value: s.value,
            partial: s.partial,
            tail_bound: s.tail_bound,
            terms: s.terms,
        };
        Ok(())
    })
}

unsafe fn matrix(data: *const f64, n: usize) -> Result<noregret::dynamics::Matrix, Fail> {
    if n == 0 {
        return Err(Fail::Lib(Error::InvalidInput("matrix dimension must be positive".into())));
    }
    let flat = slice(data, n * n, "matrix")?;
    let rows: Vec<Vec<f64>> = flat.chunks(n).map(<[f64]>::to_vec).collect();
    Ok(dynamics::matrix_from_rows(&rows)?)
}

/// Runs online regression. `config_json` is a JSON regression config; null means the reference experiment.
///
/// # Safety
/// `config_json` must be null or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_regression_run(
    config_json: *const c_char,
    seed: u64,
    out: *mut *mut NrRegressionRun,
) -> NrStatus {
    guard(|| {
        let cfg: RegressionExperimentConfig = json_arg(config_json)?;
        boxed(NrRegressionRun(regression::run_online_regression(&cfg, seed)?), out)
    })
}

/// # Safety
/// `run` must come from `nr_regression_run` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nr_regression_free(run: *mut NrRegressionRun) {
    free(run)
}

/// Number of stages, 0 for a null handle.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nr_regression_len(run: *const NrRegressionRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.records.len())
}

/// Number of learned weights, 0 for a null handle.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nr_regression_weight_count(run: *const NrRegressionRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.final_weights.len())
}

/// # Safety
/// `result` must be valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn nr_regression_losses(run: *const NrRegressionRun, result: *mut f64, capacity: usize) -> NrStatus {
    guard(|| {
        let r = handle(run, "run")?;
        write_values(&r.0.losses(), result, capacity)
    })
}

/// # Safety
/// `result` must be valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn nr_regression_final_weights(
    run: *const NrRegressionRun,
    result: *mut f64,
    capacity: usize,
) -> NrStatus {
    guard(|| {
        let r = handle(run, "run")?;
        write_values(&r.0.final_weights, result, capacity)
    })
}

/// `max(0, R(T)) / T` against the best fixed action over the first `horizon` stages.
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_regression_average_regret(
    run: *const NrRegressionRun,
    horizon: usize,
    result: *mut f64,
) -> NrStatus {
    guard(|| {
        let r = handle(run, "run")?;
        *out(result, "result")? = r.0.ledger.average_regret_at(&r.0.feasible_set, horizon)?;
        Ok(())
    })
}

/// Runs the pendulum loop for one scenario. `config_json` holds optional
/// `params`, `mixture` and `controller` objects; null means the reference setup.
///
/// # Safety
/// `config_json` must be null or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_pendulum_run(
    config_json: *const c_char,
    scenario: NrScenario,
    out: *mut *mut NrPendulumRun,
) -> NrStatus {
    guard(|| {
        let section: PendulumSection = json_arg(config_json)?;
        let scenario = match scenario {
            NrScenario::TrueModel => Scenario::TrueModel,
            NrScenario::ZeroModel => Scenario::ZeroModel,
            NrScenario::GpAdaptive => Scenario::GpAdaptive,
        };
        let bundle = control::run_pendulum_experiment(
            &section.params,
            &section.mixture,
            &section.controller.with_scenario(scenario),
        )?;
        boxed(NrPendulumRun(bundle), out)
    })
}

/// # Safety
/// `run` must come from `nr_pendulum_run` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nr_pendulum_free(run: *mut NrPendulumRun) {
    free(run)
}

/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nr_pendulum_len(run: *const NrPendulumRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.records.len())
}

/// `||e_t||` per step.
///
/// # Safety
/// `result` must be valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn nr_pendulum_error_norms(run: *const NrPendulumRun, result: *mut f64, capacity: usize) -> NrStatus {
    guard(|| {
        let r = handle(run, "run")?;
        write_values(r.0.error_norms().values(), result, capacity)
    })
}

/// `||xi - x_t||` per step.
///
/// # Safety
/// `result` must be valid for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn nr_pendulum_tracking(run: *const NrPendulumRun, result: *mut f64, capacity: usize) -> NrStatus {
    guard(|| {
        let r = handle(run, "run")?;
        write_values(&r.0.tracking_distances(), result, capacity)
    })
}

/// Mean `||e_t||` over the last quarter of the run.
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_pendulum_last_quarter_mean_error(run: *const NrPendulumRun, result: *mut f64) -> NrStatus {
    guard(|| {
        let r = handle(run, "run")?;
        *out(result, "result")? = r.0.last_quarter_mean_error();
        Ok(())
    })
}
