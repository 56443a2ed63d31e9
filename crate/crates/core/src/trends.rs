//! Mean functions under the alternative and the drift of the limiting
//! residual partial-sum process.
//!
//! For a local alternative `g / sqrt(n - d)` under a uniform design, the scaled
//! recursive-residual partial-sum process converges to `h + B` where
//!
//! ```text
//! h(z) = int_0^z g(t) dt - int_0^z (1/s) int_0^s g(t) dt ds.
//! ```
//!
//! [`trend_general`] evaluates `h` numerically for any bounded `g`;
//! [`trend_step_closed_form`] is the closed form for a single jump at `q`.

use std::cell::Cell;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{domain, Error, Result};
use crate::path::PathFunction;
use crate::quadrature::{integrate, QuadratureConfig};
use crate::regression::ObservationStream;

/// A mean function `g` on `[0, 1]`.
pub trait Alternative: Sync {
    fn evaluate(&self, t: f64) -> f64;

    /// Points where `g` or its derivative may be discontinuous.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `g(t) = c0` on `[0, t0]`, `c1` on `(t0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepAlternative {
    pub t0: f64,
    pub c0: f64,
    pub c1: f64,
}

impl StepAlternative {
    pub fn new(t0: f64, c0: f64, c1: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0 < 1.0) {
            return domain(format!("step change point must lie in (0, 1), got {t0}"));
        }
        if !c0.is_finite() || !c1.is_finite() {
            return domain("step levels must be finite");
        }
        Ok(Self { t0, c0, c1 })
    }

    /// The one-sided test only looks for a downward drift, which needs `c0 > c1`.
    pub fn is_negative_trend(&self) -> bool {
        self.c0 > self.c1
    }
}

impl Alternative for StepAlternative {
    fn evaluate(&self, t: f64) -> f64 {
        if t <= self.t0 {
            self.c0
        } else {
            self.c1
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.t0]
    }
}

/// `g(t) = c0` on `[0, t0]`, then falling linearly with slope `-c1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineAlternative {
    pub t0: f64,
    pub c0: f64,
    pub c1: f64,
}

impl LineAlternative {
    pub fn new(t0: f64, c0: f64, c1: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&t0) {
            return domain(format!("line change point must lie in [0, 1), got {t0}"));
        }
        if !(c1 > 0.0) || !c1.is_finite() || !c0.is_finite() {
            return domain(format!(
                "line slope c1 must be positive and finite, got {c1}"
            ));
        }
        Ok(Self { t0, c0, c1 })
    }
}

impl Alternative for LineAlternative {
    fn evaluate(&self, t: f64) -> f64 {
        if t <= self.t0 {
            self.c0
        } else {
            self.c0 + self.c1 * self.t0 - self.c1 * t
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.t0 > 0.0 {
            vec![self.t0]
        } else {
            Vec::new()
        }
    }
}

/// An arbitrary mean function given by a closure.
pub struct GenericAlternative<F> {
    f: F,
    breakpoints: Vec<f64>,
    bounded_variation: bool,
}

impl<F: Fn(f64) -> f64 + Sync> GenericAlternative<F> {
    pub fn new(f: F) -> Self {
        Self {
            f,
            breakpoints: Vec::new(),
            bounded_variation: true,
        }
    }

    pub fn with_breakpoints(mut self, mut breakpoints: Vec<f64>) -> Self {
        breakpoints.sort_by(f64::total_cmp);
        self.breakpoints = breakpoints;
        self
    }

    pub fn with_bounded_variation(mut self, flag: bool) -> Self {
        self.bounded_variation = flag;
        self
    }

    pub fn bounded_variation(&self) -> bool {
        self.bounded_variation
    }
}

impl<F: Fn(f64) -> f64 + Sync> Alternative for GenericAlternative<F> {
    fn evaluate(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

/// `m` evenly spaced nodes covering `[0, 1]`.
pub fn uniform_grid(nodes: usize) -> Vec<f64> {
    assert!(nodes >= 2, "a grid needs at least two nodes");
    let last = nodes - 1;
    let mut grid: Vec<f64> = (0..nodes).map(|k| k as f64 / last as f64).collect();
    grid[last] = 1.0;
    grid
}

/// The drift `h` of a general alternative, evaluated at the nodes of `grid`.
///
/// Integrates `g - m` panel by panel along the grid, where
/// `m(s) = G(s) / s` is the running mean of `g`. At `s = 0` the mean is taken as
/// `g(0+)`.
pub fn trend_general<A: Alternative + ?Sized>(
    g: &A,
    grid: &[f64],
    quad: &QuadratureConfig,
) -> Result<PathFunction> {
    // validates the grid before doing any work
    PathFunction::new(grid.to_vec(), vec![0.0; grid.len()])?;

    let mut breaks = g.breakpoints();
    breaks.retain(|p| *p > 0.0 && *p < 1.0);
    let g_at_zero = g.evaluate(f64::MIN_POSITIVE);
    let eval = |t: f64| g.evaluate(t);

    let mut values = Vec::with_capacity(grid.len());
    values.push(0.0);
    let mut cumulative_g = 0.0;
    let mut h = 0.0;
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let inner_failure = Cell::new(None);
        let g_at_a = cumulative_g;
        let running_mean = |s: f64| -> f64 {
            // removable singularity: m(0+) = g(0+)
            if s < 1e-100 {
                return g_at_zero;
            }
            match integrate(&eval, a, s, &breaks, quad) {
                Ok(partial) => (g_at_a + partial) / s,
                Err(e) => {
                    inner_failure.set(Some(e));
                    f64::NAN
                }
            }
        };
        let segment_g = integrate(&eval, a, b, &breaks, quad)?;
        let segment_mean = integrate(&running_mean, a, b, &breaks, quad);
        if let Some(e) = inner_failure.take() {
            return Err(e);
        }
        cumulative_g += segment_g;
        h += segment_g - segment_mean?;
        values.push(h);
    }
    PathFunction::new(grid.to_vec(), values)
}

/// Drift for the jump alternative under an asymptotic `q`-design:
/// `q (c1 - c0) (ln z - ln q)` for `z > q`, zero otherwise.
pub fn trend_step_closed_form(q: f64, c0: f64, c1: f64, z: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return domain(format!("q must lie in (0, 1), got {q}"));
    }
    if !(0.0..=1.0).contains(&z) {
        return domain(format!("z must lie in [0, 1], got {z}"));
    }
    if z <= q {
        return Ok(0.0);
    }
    Ok(q * (c1 - c0) * (z.ln() - q.ln()))
}

/// Distribution of the iid errors, always mean 0 and variance 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorLaw {
    #[default]
    Normal,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    Uniform,
}

impl ErrorLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ErrorLaw::Normal => StandardNormal.sample(rng),
            ErrorLaw::Uniform => {
                let half_width = 3f64.sqrt();
                rng.random_range(-half_width..=half_width)
            }
        }
    }
}

/// Noise added to the mean function: `scale * eps` with `eps` drawn from `law`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    pub law: ErrorLaw,
    pub scale: f64,
}

impl Default for Noise {
    fn default() -> Self {
        Self {
            law: ErrorLaw::Normal,
            scale: 1.0,
        }
    }
}

/// Observations `g(t_i) * signal_scale + noise` at every design point.
pub fn observe<A, R>(
    g: &A,
    design: &Design,
    signal_scale: f64,
    noise: &Noise,
    rng: &mut R,
) -> Result<ObservationStream>
where
    A: Alternative + ?Sized,
    R: Rng + ?Sized,
{
    let points = design.points().to_vec();
    let responses = points
        .iter()
        .map(|&t| {
            let eps = if noise.scale == 0.0 {
                0.0
            } else {
                noise.scale * noise.law.sample(rng)
            };
            g.evaluate(t) * signal_scale + eps
        })
        .collect();
    ObservationStream::new(points, responses)
}

/// Observations under the local alternative `g / sqrt(n - d)`.
pub fn apply_local_alternative<A, R>(
    g: &A,
    design: &Design,
    d: usize,
    noise: &Noise,
    rng: &mut R,
) -> Result<ObservationStream>
where
    A: Alternative + ?Sized,
    R: Rng + ?Sized,
{
    let n = design.len();
    if n <= d {
        return Err(Error::Config(format!("need n > d, got n = {n}, d = {d}")));
    }
    observe(g, design, 1.0 / ((n - d) as f64).sqrt(), noise, rng)
}

/// Fraction of design points at or below `t0`.
pub fn effective_q(design: &Design, t0: f64) -> f64 {
    let points = design.points();
    let s = points.partition_point(|&t| t <= t0);
    s as f64 / points.len() as f64
}
