use std::ffi::CStr;
use std::ptr;

use seqlof_ffi::*;

#[test]
fn threshold_matches_reference_quantile() {
    let mut v = 0.0;
    assert_eq!(unsafe { seqlof_threshold(0.05, &mut v) }, SeqlofStatus::Ok);
    assert!((v + 1.959_963_984_540_054_2).abs() < 1e-12);
    assert_eq!(
        unsafe { seqlof_threshold(1.5, &mut v) },
        SeqlofStatus::Domain
    );
    assert_eq!(
        unsafe { seqlof_threshold(0.05, ptr::null_mut()) },
        SeqlofStatus::NullPointer
    );
}

#[test]
fn trend_step_value() {
    let mut v = 0.0;
    assert_eq!(
        unsafe { seqlof_trend_step(0.5, 1.0, 0.0, 1.0, &mut v) },
        SeqlofStatus::Ok
    );
    assert!((v + 0.5 * 2f64.ln()).abs() < 1e-15);
}

#[test]
fn residuals_of_a_constant_fit() {
    let t = [0.1, 0.4, 0.7];
    let y = [1.0, 3.0, 2.0];
    let mut r = [f64::NAN; 3];
    let mut written = 0usize;
    let s = unsafe {
        seqlof_recursive_residuals(
            t.as_ptr(),
            y.as_ptr(),
            3,
            0,
            r.as_mut_ptr(),
            3,
            &mut written,
        )
    };
    assert_eq!(s, SeqlofStatus::Ok);
    assert_eq!(written, 2);
    // (3 - 1) / sqrt(2) and (2 - 2) / sqrt(3/2)
    assert!((r[0] - 2f64.sqrt()).abs() < 1e-15);
    assert!(r[1].abs() < 1e-15);

    let s = unsafe {
        seqlof_recursive_residuals(
            t.as_ptr(),
            y.as_ptr(),
            3,
            0,
            r.as_mut_ptr(),
            1,
            &mut written,
        )
    };
    assert_eq!(s, SeqlofStatus::LengthMismatch);
    let dup = [0.3, 0.3, 0.9];
    let s = unsafe {
        seqlof_recursive_residuals(
            dup.as_ptr(),
            y.as_ptr(),
            3,
            1,
            r.as_mut_ptr(),
            3,
            &mut written,
        )
    };
    assert_eq!(s, SeqlofStatus::SingularDesign);
}

#[test]
fn run_test_and_monitor_agree() {
    let residuals = [0.5, -1.0, -2.0, -1.5, 0.2];
    let mut batch = SeqlofOutcome {
        reject: false,
        first_crossing_index: 0,
        min_statistic: 0.0,
    };
    let s = unsafe { seqlof_run_test(residuals.as_ptr(), residuals.len(), 0.05, 6, 1, &mut batch) };
    assert_eq!(s, SeqlofStatus::Ok);

    let mut handle: *mut SeqlofMonitor = ptr::null_mut();
    assert_eq!(
        unsafe { seqlof_monitor_new(0.05, 6, 0, &mut handle) },
        SeqlofStatus::Ok
    );
    assert!(!handle.is_null());
    // y_1 = 0 then y_k = mean of earlier + residual * sqrt(k/(k-1)) reproduces the residuals
    let mut ys = vec![0.0f64];
    for (i, &r) in residuals.iter().enumerate() {
        let k = i + 1;
        let mean = ys.iter().sum::<f64>() / k as f64;
        ys.push(mean + r * ((k + 1) as f64 / k as f64).sqrt());
    }
    let mut step = SeqlofStep {
        has_residual: false,
        index: 0,
        residual: 0.0,
        statistic: 0.0,
        crossed: false,
    };
    for (i, &y) in ys.iter().enumerate() {
        let t = (i + 1) as f64 / 6.0;
        assert_eq!(
            unsafe { seqlof_monitor_push(handle, t, y, &mut step) },
            SeqlofStatus::Ok
        );
        assert_eq!(step.has_residual, i > 0);
        if i > 0 {
            assert!((step.residual - residuals[i - 1]).abs() < 1e-12);
        }
    }
    let mut streamed = batch;
    streamed.reject = !batch.reject;
    assert_eq!(
        unsafe { seqlof_monitor_outcome(handle, &mut streamed) },
        SeqlofStatus::Ok
    );
    assert_eq!(streamed.reject, batch.reject);
    assert_eq!(streamed.first_crossing_index, batch.first_crossing_index);
    assert!((streamed.min_statistic - batch.min_statistic).abs() < 1e-12);

    assert_eq!(
        unsafe { seqlof_monitor_push(handle, 1.0, 0.0, &mut step) },
        SeqlofStatus::Overrun
    );
    unsafe { seqlof_monitor_free(handle) };
    unsafe { seqlof_monitor_free(ptr::null_mut()) };
}

#[test]
fn dominance_and_minimiser() {
    let mut v = SeqlofDominance::Incomparable;
    assert_eq!(
        unsafe { seqlof_dominance_compare(0.4, 0.7, &mut v) },
        SeqlofStatus::Ok
    );
    assert_eq!(v, SeqlofDominance::Dominates);
    assert_eq!(
        unsafe { seqlof_dominance_compare(0.1, 0.2, &mut v) },
        SeqlofStatus::Ok
    );
    assert_eq!(v, SeqlofDominance::Incomparable);

    let (mut q, mut m) = (0.0, 0.0);
    assert_eq!(
        unsafe { seqlof_minimize_q_log_q(&mut q, &mut m) },
        SeqlofStatus::Ok
    );
    assert!((q - (-1f64).exp()).abs() < 1e-6);
    assert!((m + (-1f64).exp()).abs() < 1e-9);
}

#[test]
fn every_status_has_a_message() {
    for s in [
        SeqlofStatus::Ok,
        SeqlofStatus::NullPointer,
        SeqlofStatus::Domain,
        SeqlofStatus::SingularDesign,
        SeqlofStatus::LengthMismatch,
        SeqlofStatus::EmptyInput,
        SeqlofStatus::Overrun,
        SeqlofStatus::Quadrature,
        SeqlofStatus::InfeasiblePlacement,
        SeqlofStatus::Config,
        SeqlofStatus::Panic,
    ] {
        let msg = unsafe { CStr::from_ptr(seqlof_status_message(s)) };
        assert!(!msg.to_bytes().is_empty());
    }
}

#[test]
fn header_declares_exports() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/seqlof.h")).unwrap();
    for name in [
        "seqlof_threshold",
        "seqlof_trend_step",
        "seqlof_recursive_residuals",
        "seqlof_run_test",
        "seqlof_dominance_compare",
        "seqlof_minimize_q_log_q",
        "seqlof_monitor_new",
        "seqlof_monitor_push",
        "seqlof_monitor_outcome",
        "seqlof_monitor_free",
        "typedef struct SeqlofMonitor SeqlofMonitor",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
