//! Piecewise-linear paths on `[0, 1]` and the partial-sum operator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A continuous piecewise-linear function on `[0, 1]`, stored at its nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl PathFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if grid.len() < 2 {
            return Err(Error::Domain("a path needs at least two nodes".into()));
        }
        if grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 {
            return Err(Error::Domain(
                "path grid must start at 0 and end at 1".into(),
            ));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain(
                "path grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    /// Nodes `i / n` for `i = 0..=n`.
    pub(crate) fn on_uniform_grid(values: Vec<f64>) -> Self {
        let n = values.len() - 1;
        let mut grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        grid[n] = 1.0;
        Self { grid, values }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Value at `z`, interpolating linearly between nodes. `z` is clamped to `[0, 1]`.
    pub fn evaluate(&self, z: f64) -> f64 {
        let z = z.clamp(0.0, 1.0);
        // first node strictly greater than z
        let upper = self.grid.partition_point(|&g| g <= z);
        if upper == 0 {
            return self.values[0];
        }
        let lower = upper - 1;
        if self.grid[lower] == z || upper == self.grid.len() {
            return self.values[lower];
        }
        let (g0, g1) = (self.grid[lower], self.grid[upper]);
        let (v0, v1) = (self.values[lower], self.values[upper]);
        v0 + (z - g0) / (g1 - g0) * (v1 - v0)
    }

    pub fn scale(mut self, factor: f64) -> Self {
        for v in &mut self.values {
            *v *= factor;
        }
        self
    }

    /// Last node value, the path at `z = 1`.
    pub fn terminal(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// The partial-sum operator `T_n`: nodes at `i / n` carry `a_1 + ... + a_i`.
pub fn partial_sum(a: &[f64]) -> Result<PathFunction> {
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut values = Vec::with_capacity(a.len() + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for &x in a {
        acc += x;
        values.push(acc);
    }
    Ok(PathFunction::on_uniform_grid(values))
}

/// `T_m(e) / sqrt(m)` for the `m = n - d` recursive residuals `e`.
pub fn scaled_residual_path(residuals: &[f64]) -> Result<PathFunction> {
    let m = residuals.len();
    Ok(partial_sum(residuals)?.scale(1.0 / (m as f64).sqrt()))
}

/// Minimum of the path and the smallest `z` attaining it.
pub fn path_min(path: &PathFunction) -> (f64, f64) {
    let mut best = (path.values[0], path.grid[0]);
    for (&z, &v) in path.grid.iter().zip(&path.values).skip(1) {
        if v < best.0 {
            best = (v, z);
        }
    }
    best
}

/// Scaled Gaussian random walk with `n_steps` increments, a Donsker
/// approximation of Brownian motion on `[0, 1]`.
pub fn simulate_brownian(n_steps: usize, seed: u64) -> Result<PathFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_brownian_with(n_steps, &mut rng)
}

pub fn simulate_brownian_with<R: rand::Rng + ?Sized>(
    n_steps: usize,
    rng: &mut R,
) -> Result<PathFunction> {
    if n_steps == 0 {
        return Err(Error::Domain("n_steps must be at least 1".into()));
    }
    let increments: Vec<f64> = (0..n_steps).map(|_| StandardNormal.sample(rng)).collect();
    scaled_residual_path(&increments)
}
