//! One-sided Kolmogorov-type test on the scaled residual partial-sum path.
//!
//! Reject the constant model at level `alpha` as soon as the path
//! `T_m(e)(z) / sqrt(m)`, `m = n - d`, drops below the `alpha / 2` quantile of
//! the standard normal. For Brownian motion that boundary is crossed on `[0, 1]`
//! with probability exactly `alpha`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Error, Result};
use crate::path::{path_min, scaled_residual_path};
use crate::regression::{Basis, Innovation, RecursionState};

/// `Phi^{-1}(alpha / 2)`.
pub fn threshold(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    Ok(standard_normal().inverse_cdf(alpha / 2.0))
}

pub(crate) fn standard_normal() -> Normal {
    Normal::standard()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    /// Planned number of observations `n`.
    pub n_total: usize,
    pub d: usize,
}

impl TestConfig {
    pub fn new(alpha: f64, n_total: usize, d: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        if d == 0 {
            return domain("model dimension must be positive");
        }
        if n_total <= d {
            return domain(format!("need n > d, got n = {n_total}, d = {d}"));
        }
        Ok(Self { alpha, n_total, d })
    }

    /// Number of recursive residuals, `n - d`.
    pub fn residual_count(&self) -> usize {
        self.n_total - self.d
    }
}

/// Streaming state of the boundary-crossing test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorState {
    running_sum: f64,
    residual_count: usize,
    capacity: usize,
    scale: f64,
    threshold: f64,
    min_statistic: f64,
    first_crossing_index: Option<usize>,
}

impl MonitorState {
    pub fn new(config: &TestConfig) -> Result<Self> {
        let capacity = config.residual_count();
        Ok(Self {
            running_sum: 0.0,
            residual_count: 0,
            capacity,
            scale: 1.0 / (capacity as f64).sqrt(),
            threshold: threshold(config.alpha)?,
            min_statistic: 0.0,
            first_crossing_index: None,
        })
    }

    /// Consumes one residual. After a crossing the decision is frozen, but sums
    /// and counts keep updating.
    pub fn step(&mut self, residual: f64) -> Result<()> {
        if self.residual_count >= self.capacity {
            return Err(Error::Overrun {
                capacity: self.capacity,
            });
        }
        self.running_sum += residual;
        self.residual_count += 1;
        let statistic = self.statistic();
        if statistic < self.min_statistic {
            self.min_statistic = statistic;
        }
        if self.first_crossing_index.is_none() && statistic < self.threshold {
            self.first_crossing_index = Some(self.residual_count);
        }
        Ok(())
    }

    /// Current path value `S_k / sqrt(n - d)`.
    pub fn statistic(&self) -> f64 {
        self.running_sum * self.scale
    }

    pub fn running_sum(&self) -> f64 {
        self.running_sum
    }

    pub fn residual_count(&self) -> usize {
        self.residual_count
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn crossed(&self) -> bool {
        self.first_crossing_index.is_some()
    }

    /// 1-based index of the residual at which the boundary was first crossed.
    pub fn first_crossing_index(&self) -> Option<usize> {
        self.first_crossing_index
    }

    pub fn min_statistic(&self) -> f64 {
        self.min_statistic
    }

    pub fn is_complete(&self) -> bool {
        self.residual_count == self.capacity
    }
}

/// Free-function form of [`MonitorState::step`].
pub fn monitor_step(mut state: MonitorState, residual: f64) -> Result<MonitorState> {
    state.step(residual)?;
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestOutcome {
    pub reject: bool,
    pub first_crossing_index: Option<usize>,
    pub min_statistic: f64,
}

/// Batch form of the test on all `n - d` residuals.
pub fn run_test(residuals: &[f64], config: &TestConfig) -> Result<TestOutcome> {
    let expected = config.residual_count();
    if residuals.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: residuals.len(),
        });
    }
    let boundary = threshold(config.alpha)?;
    let path = scaled_residual_path(residuals)?;
    let (min_statistic, _) = path_min(&path);
    // node k of the path is the sum of the first k residuals
    let first_crossing_index = path.values().iter().position(|&v| v < boundary);
    Ok(TestOutcome {
        reject: min_statistic < boundary,
        first_crossing_index,
        min_statistic,
    })
}

/// What [`LackOfFitMonitor::push`] did with an observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonitorEvent {
    /// Still collecting the first `d` observations for the initial fit.
    Initializing { buffered: usize },
    /// A recursive residual was produced and fed to the test.
    Residual {
        /// 1-based residual index.
        index: usize,
        innovation: Innovation,
        statistic: f64,
        crossed: bool,
    },
}

/// Raw observations in, sequential test decisions out.
#[derive(Debug, Clone)]
pub struct LackOfFitMonitor<B> {
    basis: B,
    config: TestConfig,
    warmup: Vec<(f64, f64)>,
    fit: Option<RecursionState>,
    monitor: MonitorState,
    last_point: Option<f64>,
}

impl<B: Basis> LackOfFitMonitor<B> {
    pub fn new(basis: B, config: TestConfig) -> Result<Self> {
        if basis.dimension() != config.d {
            return domain(format!(
                "basis dimension {} does not match d = {}",
                basis.dimension(),
                config.d
            ));
        }
        Ok(Self {
            monitor: MonitorState::new(&config)?,
            basis,
            config,
            warmup: Vec::new(),
            fit: None,
            last_point: None,
        })
    }

    pub fn push(&mut self, t: f64, y: f64) -> Result<MonitorEvent> {
        if !(0.0..=1.0).contains(&t) {
            return domain(format!("design point {t} outside [0, 1]"));
        }
        if !y.is_finite() {
            return domain("response must be finite");
        }
        if self.last_point.is_some_and(|prev| t < prev) {
            return domain(format!(
                "design points must be nondecreasing, got {t} after {}",
                self.last_point.unwrap_or(t)
            ));
        }
        match &mut self.fit {
            None => {
                self.warmup.push((t, y));
                self.last_point = Some(t);
                if self.warmup.len() == self.config.d {
                    let (ts, ys): (Vec<f64>, Vec<f64>) = self.warmup.iter().copied().unzip();
                    self.fit = Some(RecursionState::init(&self.basis, &ts, &ys)?);
                }
                Ok(MonitorEvent::Initializing {
                    buffered: self.warmup.len(),
                })
            }
            Some(fit) => {
                if self.monitor.residual_count() >= self.monitor.capacity() {
                    return Err(Error::Overrun {
                        capacity: self.monitor.capacity(),
                    });
                }
                let innovation = fit.update(&self.basis, t, y);
                self.monitor.step(innovation.residual)?;
                self.last_point = Some(t);
                Ok(MonitorEvent::Residual {
                    index: self.monitor.residual_count(),
                    innovation,
                    statistic: self.monitor.statistic(),
                    crossed: self.monitor.crossed(),
                })
            }
        }
    }

    pub fn state(&self) -> &MonitorState {
        &self.monitor
    }

    pub fn config(&self) -> &TestConfig {
        &self.config
    }

    pub fn fit(&self) -> Option<&RecursionState> {
        self.fit.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::Polynomial;
    use approx::assert_abs_diff_eq;

    #[test]
    fn thresholds() {
        // high-precision reference values
        assert_abs_diff_eq!(threshold(0.05).unwrap(), -1.959963984540054, epsilon = 1e-8);
        assert_abs_diff_eq!(
            threshold(0.01).unwrap(),
            -2.5758293035489004,
            epsilon = 1e-8
        );
        assert!(threshold(0.999999).unwrap() < 0.0);
        assert!(threshold(0.999999).unwrap() > -1e-5);
        assert!(threshold(0.0).is_err());
        assert!(threshold(1.0).is_err());
        assert!(threshold(f64::NAN).is_err());
    }

    #[test]
    fn zero_residuals_never_cross() {
        let cfg = TestConfig::new(0.05, 11, 1).unwrap();
        let mut m = MonitorState::new(&cfg).unwrap();
        for _ in 0..10 {
            m.step(0.0).unwrap();
        }
        assert!(!m.crossed());
        assert!(m.is_complete());
        assert_eq!(m.step(0.0), Err(Error::Overrun { capacity: 10 }));
    }

    #[test]
    fn immediate_crossing() {
        let cfg = TestConfig::new(0.05, 5, 1).unwrap();
        let m = monitor_step(MonitorState::new(&cfg).unwrap(), -4.0).unwrap();
        assert_eq!(m.statistic(), -2.0);
        assert_eq!(m.first_crossing_index(), Some(1));
    }

    #[test]
    fn crossing_is_frozen() {
        let cfg = TestConfig::new(0.05, 5, 1).unwrap();
        let mut m = MonitorState::new(&cfg).unwrap();
        for r in [-4.0, 10.0, -20.0, 1.0] {
            m.step(r).unwrap();
        }
        assert_eq!(m.first_crossing_index(), Some(1));
        assert_eq!(m.running_sum(), -13.0);
        assert_eq!(m.residual_count(), 4);
        assert_eq!(m.min_statistic(), -7.0);
    }

    #[test]
    fn batch_examples() {
        let cfg = TestConfig::new(0.05, 3, 1).unwrap();
        let out = run_test(&[2f64.sqrt(), 0.0], &cfg).unwrap();
        assert!(!out.reject);
        assert_eq!(out.min_statistic, 0.0);
        assert_eq!(out.first_crossing_index, None);

        let out = run_test(&[-3.0, -3.0], &cfg).unwrap();
        assert!(out.reject);
        assert_abs_diff_eq!(out.min_statistic, -6.0 / 2f64.sqrt(), epsilon = 1e-15);
        // -3/sqrt(2) = -2.12 already crosses
        assert_eq!(out.first_crossing_index, Some(1));

        let out = run_test(&[-1.0, -3.0], &cfg).unwrap();
        assert_eq!(out.first_crossing_index, Some(2));

        assert_eq!(
            run_test(&[1.0], &cfg),
            Err(Error::LengthMismatch {
                expected: 2,
                actual: 1
            })
        );
    }

    #[test]
    fn config_validation() {
        assert!(TestConfig::new(0.05, 1, 1).is_err());
        assert!(TestConfig::new(1.5, 10, 1).is_err());
        assert!(TestConfig::new(0.05, 10, 0).is_err());
        assert_eq!(TestConfig::new(0.05, 10, 2).unwrap().residual_count(), 8);
    }

    #[test]
    fn streaming_monitor_from_raw_data() {
        let cfg = TestConfig::new(0.05, 4, 1).unwrap();
        let mut mon = LackOfFitMonitor::new(Polynomial::constant(), cfg).unwrap();
        assert_eq!(
            mon.push(0.0, 1.0).unwrap(),
            MonitorEvent::Initializing { buffered: 1 }
        );
        match mon.push(0.3, 3.0).unwrap() {
            MonitorEvent::Residual {
                index, innovation, ..
            } => {
                assert_eq!(index, 1);
                assert_abs_diff_eq!(innovation.residual, 2f64.sqrt(), epsilon = 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(mon.push(0.2, 0.0).is_err());
        mon.push(0.6, 2.0).unwrap();
        mon.push(0.9, 2.0).unwrap();
        assert!(matches!(
            mon.push(1.0, 2.0),
            Err(Error::Overrun { capacity: 3 })
        ));
        assert!(mon.state().is_complete());
    }

    #[test]
    fn monitor_rejects_basis_mismatch() {
        let cfg = TestConfig::new(0.05, 10, 1).unwrap();
        assert!(LackOfFitMonitor::new(Polynomial::line(), cfg).is_err());
    }
}
