//! Values frozen from 50-digit reference computations.

// reference digits are kept as computed
#![allow(clippy::excessive_precision)]

use approx::assert_abs_diff_eq;

use seqlof::design::{minimize_q_log_q, q_design_curve};
use seqlof::regression::{batch_ols, Polynomial, RecursionState};
use seqlof::sequential::threshold;
use seqlof::trends::trend_step_closed_form;

#[test]
fn normal_quantile_boundaries() {
    let reference = [
        (0.05, -1.9599639845400542355),
        (0.01, -2.575829303548900761),
        (0.1, -1.6448536269514727149),
        (0.001, -3.2905267314918947932),
        (1e-6, -4.8916384756985903862),
        (0.5, -0.6744897501960817432),
        (0.9, -0.12566134685507403421),
    ];
    for (alpha, expected) in reference {
        assert_abs_diff_eq!(threshold(alpha).unwrap(), expected, epsilon = 1e-8);
    }
}

// quadratic fit on five points packed into [0.028, 0.05]
const T: [f64; 5] = [0.0284, 0.0301, 0.036, 0.0377, 0.05];
const Y: [f64; 5] = [1.2, -0.1, 2.5, 2.1, 0.2];
const EXACT_4: [f64; 3] = [
    32.481341797708091222,
    -2106.7787947391757579,
    34829.721362229658426,
];
const EXACT_5: [f64; 3] = [
    -21.97847521771216216,
    1243.6925542186261388,
    -15989.992191771964777,
];

#[test]
fn ill_conditioned_quadratic_fit_is_exact() {
    let basis = Polynomial::new(2);
    let mut state = RecursionState::init(&basis, &T[..3], &Y[..3]).unwrap();
    state.update(&basis, T[3], Y[3]);
    let batch = batch_ols(&T[..4], &Y[..4], &basis).unwrap();
    for k in 0..3 {
        assert_abs_diff_eq!(state.beta_hat()[k], EXACT_4[k], epsilon = 1e-9);
        assert_abs_diff_eq!(batch[k], EXACT_4[k], epsilon = 1e-9);
    }
    state.update(&basis, T[4], Y[4]);
    let batch = batch_ols(&T, &Y, &basis).unwrap();
    for k in 0..3 {
        assert_abs_diff_eq!(state.beta_hat()[k], EXACT_5[k], epsilon = 1e-9);
        assert_abs_diff_eq!(batch[k], EXACT_5[k], epsilon = 1e-9);
    }
}

#[test]
fn e_inverse_minimum() {
    let (q, v) = minimize_q_log_q();
    assert_abs_diff_eq!(q, 0.36787944117144232160, epsilon = 1e-6);
    assert_abs_diff_eq!(v, -0.36787944117144232160, epsilon = 1e-12);
}

#[test]
fn jump_drift_values() {
    // q ln q at q = 0.5 and 0.7
    assert_abs_diff_eq!(
        trend_step_closed_form(0.5, 1.0, 0.0, 1.0).unwrap(),
        -0.34657359027997265471,
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(
        q_design_curve(0.7, 1.0),
        -0.24967246075711265,
        epsilon = 1e-15
    );
    // 0.4 * (0 - 2) * (ln 0.8 - ln 0.4) = -0.8 ln 2
    assert_abs_diff_eq!(
        trend_step_closed_form(0.4, 2.0, 0.0, 0.8).unwrap(),
        -0.55451774444795624753,
        epsilon = 1e-15
    );
}
