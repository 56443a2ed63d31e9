//! Monte Carlo harness for size, drift, power and limit-distribution checks.
//!
//! Replication `k` draws from its own ChaCha8 stream keyed by `(seed, k)`, so a
//! report depends only on the configuration, never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::design::{make_q_design, Design, QDesignSpec, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::path::{path_min, scaled_residual_path, PathFunction};
use crate::regression::{batch_residuals, Polynomial};
use crate::sequential::{run_test, standard_normal, threshold, TestConfig};
use crate::trends::{
    apply_local_alternative, effective_q, observe, trend_step_closed_form, Alternative,
    GenericAlternative, LineAlternative, Noise, StepAlternative,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scenario {
    Null,
    Step { t0: f64, c0: f64, c1: f64 },
    Line { t0: f64, c0: f64, c1: f64 },
}

impl Scenario {
    /// Change point of the alternative; `None` under the null.
    pub fn change_point(&self) -> Option<f64> {
        match *self {
            Scenario::Null => None,
            Scenario::Step { t0, .. } | Scenario::Line { t0, .. } => Some(t0),
        }
    }

    fn alternative(&self) -> Result<Box<dyn Alternative>> {
        Ok(match *self {
            Scenario::Null => Box::new(GenericAlternative::new(|_| 0.0)),
            Scenario::Step { t0, c0, c1 } => Box::new(StepAlternative::new(t0, c0, c1)?),
            Scenario::Line { t0, c0, c1 } => Box::new(LineAlternative::new(t0, c0, c1)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DesignChoice {
    /// `t_i = (i - 1) / (n - 1)`.
    Uniform,
    /// A q-design relative to the scenario's change point.
    QDesign {
        q: f64,
        placement: crate::design::Placement,
        epsilon: f64,
    },
    /// All points evenly spread on `(t0, 1]`.
    Zero,
    Explicit {
        design: Design,
    },
}

impl DesignChoice {
    pub fn build(&self, n: usize, t0: Option<f64>) -> Result<Design> {
        match self {
            DesignChoice::Uniform => Design::uniform(n),
            DesignChoice::QDesign {
                q,
                placement,
                epsilon,
            } => {
                let t0 =
                    t0.ok_or_else(|| Error::Config("a q-design needs a change point t0".into()))?;
                let spec = QDesignSpec {
                    q: *q,
                    t0,
                    placement: *placement,
                };
                make_q_design(n, &spec, *epsilon)
            }
            DesignChoice::Zero => Design::tail_uniform(n, t0.unwrap_or(0.0)),
            DesignChoice::Explicit { design } => {
                if design.len() != n {
                    return Err(Error::Config(format!(
                        "explicit design has {} points but n = {n}",
                        design.len()
                    )));
                }
                Ok(design.clone())
            }
        }
    }

    pub fn q_design(q: f64, placement: crate::design::Placement) -> Self {
        DesignChoice::QDesign {
            q,
            placement,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub replications: usize,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub seed: u64,
    pub scenario: Scenario,
    pub design: DesignChoice,
    pub noise: Noise,
    /// Scale the alternative by `1 / sqrt(n - d)`.
    pub local: bool,
}

impl McConfig {
    pub fn new(n: usize, replications: usize, seed: u64) -> Self {
        Self {
            replications,
            n,
            d: 1,
            alpha: 0.05,
            seed,
            scenario: Scenario::Null,
            design: DesignChoice::Uniform,
            noise: Noise::default(),
            local: true,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_scenario(mut self, scenario: Scenario) -> Self {
        self.scenario = scenario;
        self
    }

    pub fn with_design(mut self, design: DesignChoice) -> Self {
        self.design = design;
        self
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_dimension(mut self, d: usize) -> Self {
        self.d = d;
        self
    }

    pub fn fixed_alternative(mut self) -> Self {
        self.local = false;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.d == 0 || self.n <= self.d {
            return Err(Error::Config(format!(
                "need n > d >= 1, got n = {}, d = {}",
                self.n, self.d
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.noise.scale >= 0.0) {
            return Err(Error::Config("noise scale must be non-negative".into()));
        }
        Ok(())
    }
}

/// Per-replication generator: stream `index` of the ChaCha8 key derived from `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub z: f64,
    pub mean: f64,
    pub stderr: f64,
    pub h_closed_form: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Functional {
    /// Path value at `z = 1`.
    Terminal,
    /// Path minimum over `[0, 1]`.
    Minimum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub functional: Functional,
    pub mean: f64,
    pub variance: f64,
    /// Sup distance between the empirical CDF and the standard normal CDF.
    pub ks_distance: Option<f64>,
    pub threshold: Option<f64>,
    pub crossing_frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub estimate: f64,
    pub std_error: f64,
    pub replications: usize,
    pub rejections: usize,
    pub effective_q: Option<f64>,
    pub config: McConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub curve: Vec<CurvePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSummary>,
}

fn proportion_stderr(p: f64, replications: usize) -> f64 {
    (p * (1.0 - p) / replications as f64).sqrt()
}

struct Prepared {
    design: Design,
    alternative: Box<dyn Alternative>,
    basis: Polynomial,
    test: TestConfig,
}

impl Prepared {
    fn new(config: &McConfig) -> Result<Self> {
        config.validate()?;
        let design = config
            .design
            .build(config.n, config.scenario.change_point())?;
        Ok(Self {
            design,
            alternative: config.scenario.alternative()?,
            basis: Polynomial::new(config.d - 1),
            test: TestConfig::new(config.alpha, config.n, config.d)?,
        })
    }

    fn residuals(&self, config: &McConfig, index: usize) -> Result<Vec<f64>> {
        let mut rng = replication_rng(config.seed, index as u64);
        let stream = if config.local {
            apply_local_alternative(
                &*self.alternative,
                &self.design,
                config.d,
                &config.noise,
                &mut rng,
            )?
        } else {
            observe(
                &*self.alternative,
                &self.design,
                1.0,
                &config.noise,
                &mut rng,
            )?
        };
        batch_residuals(&stream, &self.basis)
    }

    fn effective_q(&self, config: &McConfig) -> Option<f64> {
        config
            .scenario
            .change_point()
            .map(|t0| effective_q(&self.design, t0))
    }

    fn rejection_report(&self, config: &McConfig) -> Result<McReport> {
        let decisions = (0..config.replications)
            .into_par_iter()
            .map(|k| Ok(run_test(&self.residuals(config, k)?, &self.test)?.reject))
            .collect::<Result<Vec<bool>>>()?;
        let rejections = decisions.iter().filter(|&&r| r).count();
        let estimate = rejections as f64 / config.replications as f64;
        Ok(McReport {
            estimate,
            std_error: proportion_stderr(estimate, config.replications),
            replications: config.replications,
            rejections,
            effective_q: self.effective_q(config),
            config: config.clone(),
            curve: Vec::new(),
            distribution: None,
        })
    }
}

/// Empirical size of the test under the null model.
pub fn mc_size(config: &McConfig) -> Result<McReport> {
    if config.scenario != Scenario::Null {
        return Err(Error::Config("size runs need the null scenario".into()));
    }
    Prepared::new(config)?.rejection_report(config)
}

/// Empirical power under an alternative.
pub fn mc_power(config: &McConfig) -> Result<McReport> {
    if config.scenario == Scenario::Null {
        return Err(Error::Config(
            "power runs need an alternative scenario".into(),
        ));
    }
    Prepared::new(config)?.rejection_report(config)
}

/// Mean of the scaled residual path at each `z` under a locally scaled jump,
/// next to the limiting drift for the design's effective `q`.
///
/// `estimate` and `std_error` refer to the last grid point; `rejections`
/// counts test rejections over the same replications.
pub fn mc_drift(config: &McConfig, z_grid: &[f64]) -> Result<McReport> {
    let Scenario::Step { t0, c0, c1 } = config.scenario else {
        return Err(Error::Config("drift runs need a step scenario".into()));
    };
    if !config.local {
        return Err(Error::Config("drift runs need the local scaling".into()));
    }
    if config.d != 1 {
        return Err(Error::Config(
            "the drift limit is for the constant model (d = 1)".into(),
        ));
    }
    if z_grid.is_empty() || z_grid.iter().any(|z| !(0.0..=1.0).contains(z)) {
        return Err(Error::Config(
            "z grid must be nonempty and inside [0, 1]".into(),
        ));
    }
    let prepared = Prepared::new(config)?;
    let q = effective_q(&prepared.design, t0);

    let per_replication = (0..config.replications)
        .into_par_iter()
        .map(|k| {
            let residuals = prepared.residuals(config, k)?;
            let reject = run_test(&residuals, &prepared.test)?.reject;
            let path = scaled_residual_path(&residuals)?;
            let values: Vec<f64> = z_grid.iter().map(|&z| path.evaluate(z)).collect();
            Ok((reject, values))
        })
        .collect::<Result<Vec<(bool, Vec<f64>)>>>()?;

    let reps = config.replications as f64;
    let mut curve = Vec::with_capacity(z_grid.len());
    for (j, &z) in z_grid.iter().enumerate() {
        let mean = per_replication.iter().map(|(_, v)| v[j]).sum::<f64>() / reps;
        let stderr = if config.replications > 1 {
            let ss = per_replication
                .iter()
                .map(|(_, v)| (v[j] - mean).powi(2))
                .sum::<f64>();
            (ss / (reps - 1.0)).sqrt() / reps.sqrt()
        } else {
            0.0
        };
        let h_closed_form = trend_step_closed_form(q, c0, c1, z).ok();
        curve.push(CurvePoint {
            z,
            mean,
            stderr,
            h_closed_form,
        });
    }
    let rejections = per_replication.iter().filter(|(r, _)| *r).count();
    let last = curve.last().expect("grid is nonempty");
    Ok(McReport {
        estimate: last.mean,
        std_error: last.stderr,
        replications: config.replications,
        rejections,
        effective_q: Some(q),
        config: config.clone(),
        curve,
        distribution: None,
    })
}

/// Kolmogorov distance between a sample and the standard normal CDF.
pub fn ks_distance_to_normal(sample: &[f64]) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let normal = standard_normal();
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = normal.cdf(x);
            let above = (i + 1) as f64 / m - cdf;
            let below = cdf - i as f64 / m;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Distribution of a path functional under the null.
///
/// For [`Functional::Terminal`] `estimate` is the sample mean and the summary
/// carries the Kolmogorov distance to `N(0, 1)`. For [`Functional::Minimum`]
/// `estimate` is the frequency of crossing the level-`alpha` boundary.
pub fn mc_limit_distribution(config: &McConfig, functional: Functional) -> Result<McReport> {
    if config.scenario != Scenario::Null {
        return Err(Error::Config(
            "limit-distribution runs need the null scenario".into(),
        ));
    }
    let prepared = Prepared::new(config)?;
    let values = (0..config.replications)
        .into_par_iter()
        .map(|k| {
            let path: PathFunction = scaled_residual_path(&prepared.residuals(config, k)?)?;
            Ok(match functional {
                Functional::Terminal => path.terminal(),
                Functional::Minimum => path_min(&path).0,
            })
        })
        .collect::<Result<Vec<f64>>>()?;

    let reps = config.replications as f64;
    let mean = values.iter().sum::<f64>() / reps;
    let variance = if config.replications > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1.0)
    } else {
        0.0
    };
    let boundary = threshold(config.alpha)?;
    let crossings = values.iter().filter(|&&v| v < boundary).count();
    let crossing_frequency = crossings as f64 / reps;

    let (estimate, std_error, summary) = match functional {
        Functional::Terminal => (
            mean,
            (variance / reps).sqrt(),
            DistributionSummary {
                functional,
                mean,
                variance,
                ks_distance: Some(ks_distance_to_normal(&values)),
                threshold: None,
                crossing_frequency: None,
            },
        ),
        Functional::Minimum => (
            crossing_frequency,
            proportion_stderr(crossing_frequency, config.replications),
            DistributionSummary {
                functional,
                mean,
                variance,
                ks_distance: None,
                threshold: Some(boundary),
                crossing_frequency: Some(crossing_frequency),
            },
        ),
    };
    Ok(McReport {
        estimate,
        std_error,
        replications: config.replications,
        rejections: crossings,
        effective_q: None,
        config: config.clone(),
        curve: Vec::new(),
        distribution: Some(summary),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub replications: usize,
    pub crossings: usize,
}

/// Fraction of simulated Brownian paths whose minimum falls below `level`.
pub fn brownian_crossing_frequency(
    n_steps: usize,
    replications: usize,
    level: f64,
    seed: u64,
) -> Result<CrossingEstimate> {
    if replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let crossed = (0..replications)
        .into_par_iter()
        .map(|k| {
            let mut rng = replication_rng(seed, k as u64);
            let path = crate::path::simulate_brownian_with(n_steps, &mut rng)?;
            Ok(path_min(&path).0 < level)
        })
        .collect::<Result<Vec<bool>>>()?;
    let crossings = crossed.iter().filter(|&&c| c).count();
    let estimate = crossings as f64 / replications as f64;
    Ok(CrossingEstimate {
        estimate,
        std_error: proportion_stderr(estimate, replications),
        replications,
        crossings,
    })
}
