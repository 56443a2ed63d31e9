//! Statistical checks with fixed seeds.

use seqlof::design::Placement;
use seqlof::experiment::{
    ks_distance_to_normal, mc_limit_distribution, mc_power, mc_size, DesignChoice, Functional,
    McConfig, Scenario,
};
use seqlof::trends::{ErrorLaw, Noise};

#[test]
fn terminal_value_is_standard_normal() {
    let config = McConfig::new(1000, 5000, 77);
    let report = mc_limit_distribution(&config, Functional::Terminal).unwrap();
    let dist = report.distribution.unwrap();
    // 1% critical value of the one-sample KS statistic at 5000 draws
    assert!(
        dist.ks_distance.unwrap() < 1.63 / 5000f64.sqrt(),
        "{dist:?}"
    );
    assert!(dist.mean.abs() < 4.0 / 5000f64.sqrt());
    assert!((dist.variance - 1.0).abs() < 0.08);
}

#[test]
fn size_holds_for_uniform_errors_and_line_model() {
    let uniform = McConfig::new(300, 4000, 78).with_noise(Noise {
        law: ErrorLaw::Uniform,
        scale: 1.0,
    });
    let r = mc_size(&uniform).unwrap();
    assert!((0.03..=0.07).contains(&r.estimate), "{}", r.estimate);
    let line = McConfig::new(300, 4000, 79).with_dimension(2);
    let r = mc_size(&line).unwrap();
    assert!(r.estimate <= 0.07, "{}", r.estimate);
}

#[test]
fn falling_jump_has_power_rising_jump_does_not() {
    let falling = McConfig::new(400, 2000, 80).with_scenario(Scenario::Step {
        t0: 0.4,
        c0: 4.0,
        c1: 0.0,
    });
    let rising = McConfig::new(400, 2000, 80).with_scenario(Scenario::Step {
        t0: 0.4,
        c0: 0.0,
        c1: 4.0,
    });
    let (f, r) = (mc_power(&falling).unwrap(), mc_power(&rising).unwrap());
    // limiting power 0.382 (se 0.0024) from an independent simulation of B + h
    assert!(
        (f.estimate - 0.382).abs() < 4.0 * (f.std_error + 0.0024),
        "{}",
        f.estimate
    );
    assert!(r.estimate < 0.05, "{}", r.estimate);
}

#[test]
fn clustered_design_reports_its_effective_q() {
    let config = McConfig::new(200, 200, 81)
        .with_scenario(Scenario::Step {
            t0: 0.5,
            c0: 2.0,
            c1: 0.0,
        })
        .with_design(DesignChoice::q_design(0.37, Placement::ClusteredDStar));
    let report = mc_power(&config).unwrap();
    assert_eq!(report.effective_q, Some(74.0 / 200.0));
}

#[test]
fn ks_distance_flags_a_shifted_sample() {
    let sample: Vec<f64> = (1..=999).map(|k| k as f64 / 1000.0 + 3.0).collect();
    assert!(ks_distance_to_normal(&sample) > 0.9);
}
