//! C ABI over `seqlof`.
//!
//! Every function returns a [`SeqlofStatus`] and writes results through out
//! pointers. Monitors are opaque handles created with [`seqlof_monitor_new`]
//! and released with [`seqlof_monitor_free`].

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use seqlof::design::{dominance_compare, minimize_q_log_q, Dominance};
use seqlof::regression::{batch_residuals, ObservationStream, Polynomial};
use seqlof::sequential::{run_test, threshold, LackOfFitMonitor, MonitorEvent, TestConfig};
use seqlof::trends::trend_step_closed_form;
use seqlof::Error;

/// Result codes shared by every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqlofStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    SingularDesign = 3,
    LengthMismatch = 4,
    EmptyInput = 5,
    Overrun = 6,
    Quadrature = 7,
    InfeasiblePlacement = 8,
    Config = 9,
    Panic = 99,
}

impl From<&Error> for SeqlofStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::SingularInitialDesign { .. } | Error::SingularDesign => {
                SeqlofStatus::SingularDesign
            }
            Error::EmptyInput => SeqlofStatus::EmptyInput,
            Error::Domain(_) => SeqlofStatus::Domain,
            Error::LengthMismatch { .. } => SeqlofStatus::LengthMismatch,
            Error::Overrun { .. } => SeqlofStatus::Overrun,
            Error::QuadratureFailure { .. } => SeqlofStatus::Quadrature,
            Error::InfeasiblePlacement(_) => SeqlofStatus::InfeasiblePlacement,
            Error::Config(_) => SeqlofStatus::Config,
        }
    }
}

fn guard<F: FnOnce() -> Result<(), SeqlofStatus>>(f: F) -> SeqlofStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SeqlofStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => SeqlofStatus::Panic,
    }
}

fn lib<T>(r: seqlof::Result<T>) -> Result<T, SeqlofStatus> {
    r.map_err(|e| SeqlofStatus::from(&e))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, SeqlofStatus> {
    p.as_mut().ok_or(SeqlofStatus::NullPointer)
}

unsafe fn input<'a>(p: *const f64, len: usize) -> Result<&'a [f64], SeqlofStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(SeqlofStatus::NullPointer);
    }
    Ok(slice::from_raw_parts(p, len))
}

/// Static description of a status code. Never null.
#[no_mangle]
pub extern "C" fn seqlof_status_message(status: SeqlofStatus) -> *const std::ffi::c_char {
    let s: &'static [u8] = match status {
        SeqlofStatus::Ok => b"ok\0",
        SeqlofStatus::NullPointer => b"null pointer argument\0",
        SeqlofStatus::Domain => b"argument out of range\0",
        SeqlofStatus::SingularDesign => b"singular design\0",
        SeqlofStatus::LengthMismatch => b"length mismatch\0",
        SeqlofStatus::EmptyInput => b"empty input\0",
        SeqlofStatus::Overrun => b"more residuals than planned\0",
        SeqlofStatus::Quadrature => b"quadrature did not converge\0",
        SeqlofStatus::InfeasiblePlacement => b"infeasible design placement\0",
        SeqlofStatus::Config => b"invalid configuration\0",
        SeqlofStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Rejection boundary `Phi^{-1}(alpha / 2)`.
///
/// # Safety
/// `result` must be a valid pointer to a writable double.
#[no_mangle]
pub unsafe extern "C" fn seqlof_threshold(alpha: f64, result: *mut f64) -> SeqlofStatus {
    guard(|| {
        *out(result)? = lib(threshold(alpha))?;
        Ok(())
    })
}

/// Limiting drift of the residual path for a jump from `c0` to `c1` at `q`.
///
/// # Safety
/// `result` must be a valid pointer to a writable double.
#[no_mangle]
pub unsafe extern "C" fn seqlof_trend_step(
    q: f64,
    c0: f64,
    c1: f64,
    z: f64,
    result: *mut f64,
) -> SeqlofStatus {
    guard(|| {
        *out(result)? = lib(trend_step_closed_form(q, c0, c1, z))?;
        Ok(())
    })
}

/// Recursive residuals of a polynomial fit of the given degree.
///
/// Writes `n - degree - 1` values to `residuals` and stores the count in
/// `written`.
///
/// # Safety
/// `points` and `responses` must point to `n` readable doubles and
/// `residuals` to `residuals_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn seqlof_recursive_residuals(
    points: *const f64,
    responses: *const f64,
    n: usize,
    degree: usize,
    residuals: *mut f64,
    residuals_len: usize,
    written: *mut usize,
) -> SeqlofStatus {
    guard(|| {
        let t = input(points, n)?;
        let y = input(responses, n)?;
        let written = out(written)?;
        let stream = lib(ObservationStream::new(t.to_vec(), y.to_vec()))?;
        let r = lib(batch_residuals(&stream, &Polynomial::new(degree)))?;
        if r.len() > residuals_len {
            return Err(SeqlofStatus::LengthMismatch);
        }
        if !r.is_empty() {
            if residuals.is_null() {
                return Err(SeqlofStatus::NullPointer);
            }
            slice::from_raw_parts_mut(residuals, r.len()).copy_from_slice(&r);
        }
        *written = r.len();
        Ok(())
    })
}

/// Outcome of a completed test.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqlofOutcome {
    pub reject: bool,
    /// 1-based index of the first residual below the boundary, 0 if none.
    pub first_crossing_index: usize,
    pub min_statistic: f64,
}

/// Runs the test on a full vector of `n_total - d` residuals.
///
/// # Safety
/// `residuals` must point to `len` readable doubles, `outcome` must be writable.
#[no_mangle]
pub unsafe extern "C" fn seqlof_run_test(
    residuals: *const f64,
    len: usize,
    alpha: f64,
    n_total: usize,
    d: usize,
    outcome: *mut SeqlofOutcome,
) -> SeqlofStatus {
    guard(|| {
        let r = input(residuals, len)?;
        let outcome = out(outcome)?;
        let config = lib(TestConfig::new(alpha, n_total, d))?;
        let result = lib(run_test(r, &config))?;
        *outcome = SeqlofOutcome {
            reject: result.reject,
            first_crossing_index: result.first_crossing_index.unwrap_or(0),
            min_statistic: result.min_statistic,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqlofDominance {
    Dominates = 0,
    Dominated = 1,
    Incomparable = 2,
}

/// Compares the asymptotic q-designs `q1` and `q2` on the default grid.
///
/// # Safety
/// `verdict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn seqlof_dominance_compare(
    q1: f64,
    q2: f64,
    verdict: *mut SeqlofDominance,
) -> SeqlofStatus {
    guard(|| {
        let verdict = out(verdict)?;
        *verdict = match lib(dominance_compare(q1, q2, None))? {
            Dominance::Dominates => SeqlofDominance::Dominates,
            Dominance::Dominated => SeqlofDominance::Dominated,
            Dominance::Incomparable => SeqlofDominance::Incomparable,
        };
        Ok(())
    })
}

/// Minimiser of `q ln q` on (0, 1] and the minimum value.
///
/// # Safety
/// Both pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn seqlof_minimize_q_log_q(
    q_star: *mut f64,
    value: *mut f64,
) -> SeqlofStatus {
    guard(|| {
        let (q, v) = minimize_q_log_q();
        *out(q_star)? = q;
        *out(value)? = v;
        Ok(())
    })
}

/// Streaming lack-of-fit monitor for a polynomial model.
pub struct SeqlofMonitor {
    inner: LackOfFitMonitor<Polynomial>,
}

/// Per-observation report from [`seqlof_monitor_push`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqlofStep {
    /// False while the initial fit is still being collected.
    pub has_residual: bool,
    /// 1-based residual index, 0 during warm-up.
    pub index: usize,
    pub residual: f64,
    pub statistic: f64,
    pub crossed: bool,
}

/// Creates a monitor for `n_total` observations and a polynomial of `degree`.
///
/// # Safety
/// `handle` must be writable. The returned handle must be released with
/// [`seqlof_monitor_free`].
#[no_mangle]
pub unsafe extern "C" fn seqlof_monitor_new(
    alpha: f64,
    n_total: usize,
    degree: usize,
    handle: *mut *mut SeqlofMonitor,
) -> SeqlofStatus {
    guard(|| {
        let handle = out(handle)?;
        let config = lib(TestConfig::new(alpha, n_total, degree + 1))?;
        let inner = lib(LackOfFitMonitor::new(Polynomial::new(degree), config))?;
        *handle = Box::into_raw(Box::new(SeqlofMonitor { inner }));
        Ok(())
    })
}

/// Feeds one observation.
///
/// # Safety
/// `monitor` must come from [`seqlof_monitor_new`] and `step` must be writable.
#[no_mangle]
pub unsafe extern "C" fn seqlof_monitor_push(
    monitor: *mut SeqlofMonitor,
    t: f64,
    y: f64,
    step: *mut SeqlofStep,
) -> SeqlofStatus {
    guard(|| {
        let monitor = out(monitor)?;
        let step = out(step)?;
        *step = match lib(monitor.inner.push(t, y))? {
            MonitorEvent::Initializing { .. } => SeqlofStep {
                has_residual: false,
                index: 0,
                residual: 0.0,
                statistic: 0.0,
                crossed: monitor.inner.state().crossed(),
            },
            MonitorEvent::Residual {
                index,
                innovation,
                statistic,
                crossed,
            } => SeqlofStep {
                has_residual: true,
                index,
                residual: innovation.residual,
                statistic,
                crossed,
            },
        };
        Ok(())
    })
}

/// Current state of a monitor as a test outcome.
///
/// # Safety
/// `monitor` must come from [`seqlof_monitor_new`] and `outcome` must be writable.
#[no_mangle]
pub unsafe extern "C" fn seqlof_monitor_outcome(
    monitor: *const SeqlofMonitor,
    outcome: *mut SeqlofOutcome,
) -> SeqlofStatus {
    guard(|| {
        let monitor = monitor.as_ref().ok_or(SeqlofStatus::NullPointer)?;
        let state = monitor.inner.state();
        *out(outcome)? = SeqlofOutcome {
            reject: state.crossed(),
            first_crossing_index: state.first_crossing_index().unwrap_or(0),
            min_statistic: state.min_statistic(),
        };
        Ok(())
    })
}

/// Releases a monitor. Null is ignored.
///
/// # Safety
/// `monitor` must be null or come from [`seqlof_monitor_new`], and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn seqlof_monitor_free(monitor: *mut SeqlofMonitor) {
    if !monitor.is_null() {
        drop(Box::from_raw(monitor));
    }
}
