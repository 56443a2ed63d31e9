//! Designs, asymptotic q-designs and their comparison.
//!
//! Under the jump alternative an asymptotic q-design shifts the limit process by
//! `(c0 - c1)` times the curve `-q (ln z - ln q)` on `(q, 1]`. One design is
//! uniformly better than another when its curve lies pointwise at or below the
//! other's and strictly below somewhere. On `[1/e, 1)` a smaller `q` is always
//! uniformly better.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::QuadratureConfig;
use crate::trends::{trend_general, uniform_grid, LineAlternative};

/// Sorted design points in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    points: Vec<f64>,
}

impl Design {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        if points.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return domain("design points must lie in [0, 1]");
        }
        if points.windows(2).any(|w| w[0] > w[1]) {
            return domain("design points must be sorted");
        }
        Ok(Self { points })
    }

    /// `t_i = (i - 1) / (n - 1)`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return domain("uniform design needs at least two points");
        }
        Self::new(uniform_grid(n))
    }

    /// `n` points evenly spaced on `(t0, 1]`, the asymptotic 0-design.
    pub fn tail_uniform(n: usize, t0: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&t0) {
            return domain(format!("t0 must lie in [0, 1), got {t0}"));
        }
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Self::new(spread_above(t0, n))
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Points packed at spacing `epsilon` against 0 and against 1.
    ClusteredDStar,
    /// Points evenly spread on `[0, t0]` and on `(t0, 1]`.
    UniformSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QDesignSpec {
    pub q: f64,
    pub t0: f64,
    pub placement: Placement,
}

/// Default spacing for clustered placements.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Builds an `n`-point design with `round(q n)` points at or below `t0`.
pub fn make_q_design(n: usize, spec: &QDesignSpec, epsilon: f64) -> Result<Design> {
    if n < 2 {
        return domain("q-design needs at least two points");
    }
    if !(0.0..=1.0).contains(&spec.q) {
        return domain(format!("q must lie in [0, 1], got {}", spec.q));
    }
    if !(spec.t0 > 0.0 && spec.t0 < 1.0) {
        return domain(format!("t0 must lie in (0, 1), got {}", spec.t0));
    }
    let s = (spec.q * n as f64).round() as usize;
    let rest = n - s;
    let points = match spec.placement {
        Placement::ClusteredDStar => {
            if !(epsilon > 0.0) {
                return domain("epsilon must be positive");
            }
            if s == 0 || rest == 0 {
                return Err(Error::InfeasiblePlacement(format!(
                    "round(q n) = {s} leaves one cluster empty"
                )));
            }
            let lower_top = (s - 1) as f64 * epsilon;
            let upper_bottom = 1.0 - (rest - 1) as f64 * epsilon;
            if lower_top > spec.t0 {
                return Err(Error::InfeasiblePlacement(format!(
                    "{s} points at spacing {epsilon} reach {lower_top}, past t0 = {}",
                    spec.t0
                )));
            }
            if lower_top >= upper_bottom || upper_bottom <= spec.t0 {
                return Err(Error::InfeasiblePlacement(format!(
                    "upper cluster starts at {upper_bottom}, not above t0 = {} and the lower cluster",
                    spec.t0
                )));
            }
            let mut points: Vec<f64> = (0..s).map(|j| j as f64 * epsilon).collect();
            points.extend((0..rest).map(|j| 1.0 - (rest - 1 - j) as f64 * epsilon));
            points
        }
        Placement::UniformSplit => {
            let mut points = spread_up_to(spec.t0, s);
            points.extend(spread_above(spec.t0, rest));
            points
        }
    };
    Design::new(points)
}

// `count` points evenly spread on [0, t0], endpoints included.
fn spread_up_to(t0: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|j| (t0 * (j as f64 / (count - 1) as f64)).min(t0))
            .collect(),
    }
}

// `count` points evenly spread on (t0, 1], ending at 1.
fn spread_above(t0: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|j| {
            if j == count {
                1.0
            } else {
                t0 + (1.0 - t0) * (j as f64 / count as f64)
            }
        })
        .collect()
}

/// `-q (ln z - ln q)` for `z > q`, zero otherwise.
pub fn q_design_curve(q: f64, z: f64) -> f64 {
    if z <= q {
        0.0
    } else {
        -q * (z.ln() - q.ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dominance {
    Dominates,
    Dominated,
    Incomparable,
}

impl fmt::Display for Dominance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dominance::Dominates => "dominates",
            Dominance::Dominated => "dominated",
            Dominance::Incomparable => "incomparable",
        })
    }
}

/// Tolerance for pointwise comparison of closed-form curves.
pub const DOMINANCE_TOLERANCE: f64 = 1e-12;

/// Compares two drift curves sampled on a common grid. Lower is better.
pub fn compare_curves(first: &[f64], second: &[f64], tolerance: f64) -> Dominance {
    let mut first_below = false;
    let mut first_above = false;
    for (a, b) in first.iter().zip(second) {
        let diff = a - b;
        if diff < -tolerance {
            first_below = true;
        } else if diff > tolerance {
            first_above = true;
        }
    }
    match (first_below, first_above) {
        (true, false) => Dominance::Dominates,
        (false, true) => Dominance::Dominated,
        _ => Dominance::Incomparable,
    }
}

/// The default comparison grid: about 2048 log-spaced points on `[1e-6, 1]`, denser
/// around `q1`, `q2` and 1, plus those three points exactly.
pub fn dominance_grid(q1: f64, q2: f64) -> Vec<f64> {
    const BASE: usize = 1024;
    const LOCAL: usize = 205;
    let log_lo = (1e-6f64).ln();
    let mut grid: Vec<f64> = (0..BASE)
        .map(|k| (log_lo * (1.0 - k as f64 / (BASE - 1) as f64)).exp())
        .collect();
    for centre in [q1, q2, 1.0] {
        for k in 0..LOCAL {
            // offsets from 1e-8 to 1e-1 on either side
            let offset = (1e-8f64.ln()
                + (1e-1f64.ln() - 1e-8f64.ln()) * k as f64 / (LOCAL - 1) as f64)
                .exp();
            for z in [centre - offset, centre + offset] {
                if z > 0.0 && z <= 1.0 {
                    grid.push(z);
                }
            }
        }
    }
    grid.extend([q1, q2, 1.0]);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Whether an asymptotic `q1`-design is uniformly better than a `q2`-design
/// for the jump alternative. Uses [`dominance_grid`] when `grid` is `None`.
pub fn dominance_compare(q1: f64, q2: f64, grid: Option<&[f64]>) -> Result<Dominance> {
    for q in [q1, q2] {
        if !(q > 0.0 && q < 1.0) {
            return domain(format!("q must lie in (0, 1), got {q}"));
        }
    }
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = dominance_grid(q1, q2);
            &owned
        }
    };
    if grid.iter().any(|z| !(*z > 0.0 && *z <= 1.0)) {
        return domain("comparison grid must lie in (0, 1]");
    }
    let first: Vec<f64> = grid.iter().map(|&z| q_design_curve(q1, z)).collect();
    let second: Vec<f64> = grid.iter().map(|&z| q_design_curve(q2, z)).collect();
    Ok(compare_curves(&first, &second, DOMINANCE_TOLERANCE))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairVerdict {
    pub q_smaller: f64,
    pub q_larger: f64,
    pub verdict: Dominance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ELawReport {
    pub pairs: Vec<PairVerdict>,
    /// Grid entries outside `[1/e, 1)`, which the law does not cover.
    pub out_of_range: Vec<f64>,
    /// Pairs `q_a < q_b` where `q_a ln q_a < q_b ln q_b` fails.
    pub monotonicity_failures: Vec<(f64, f64)>,
}

impl ELawReport {
    pub fn violations(&self) -> impl Iterator<Item = &PairVerdict> {
        self.pairs
            .iter()
            .filter(|p| p.verdict != Dominance::Dominates)
    }

    pub fn passed(&self) -> bool {
        self.out_of_range.is_empty()
            && self.monotonicity_failures.is_empty()
            && self.violations().next().is_none()
    }
}

/// Checks that every smaller `q` in the grid dominates every larger one.
pub fn verify_e_inverse_law(q_grid: &[f64]) -> ELawReport {
    let inv_e = (-1.0f64).exp();
    let mut qs: Vec<f64> = q_grid.to_vec();
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    let (valid, out_of_range): (Vec<f64>, Vec<f64>) =
        qs.into_iter().partition(|&q| q >= inv_e && q < 1.0);

    let mut pairs = Vec::new();
    let mut monotonicity_failures = Vec::new();
    for (i, &qa) in valid.iter().enumerate() {
        for &qb in &valid[i + 1..] {
            let verdict = dominance_compare(qa, qb, None).unwrap_or(Dominance::Incomparable);
            pairs.push(PairVerdict {
                q_smaller: qa,
                q_larger: qb,
                verdict,
            });
            if !(qa * qa.ln() < qb * qb.ln()) {
                monotonicity_failures.push((qa, qb));
            }
        }
    }
    ELawReport {
        pairs,
        out_of_range,
        monotonicity_failures,
    }
}

/// Minimizes `q ln q` on `(0, 1)` by golden-section search.
pub fn minimize_q_log_q() -> (f64, f64) {
    let f = |q: f64| q * q.ln();
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-12, 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let q = 0.5 * (a + b);
    (q, f(q))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineComparison {
    pub t0: f64,
    pub q: f64,
    pub c1: f64,
    pub grid: Vec<f64>,
    /// Drift of the design with every point evenly spread on `[t0, 1]`.
    pub zero_design: Vec<f64>,
    /// Drift of the design with a fraction `q` of points at or below `t0`.
    pub q_design: Vec<f64>,
    /// How the 0-design compares with the q-design.
    pub verdict: Dominance,
}

/// Tolerance for comparing quadrature-evaluated drift curves.
pub const LINE_COMPARE_TOLERANCE: f64 = 1e-9;

/// Compares the 0-design on `[t0, 1]` with a q-design for the falling-line
/// alternative.
///
/// Indexing observations by `u = (i - 1) / (n - 1)`, the q-design sees a
/// constant mean up to `u = q` and then a line falling with slope
/// `c1 (1 - t0) / (1 - q)`; the 0-design sees a line falling from `u = 0` with
/// slope `c1 (1 - t0)`. Both drifts follow from [`trend_general`]. The level
/// `c0` does not affect the drift.
pub fn line_design_compare(
    t0: f64,
    q: f64,
    c1: f64,
    grid: &[f64],
    quad: &QuadratureConfig,
) -> Result<LineComparison> {
    if !(0.0..1.0).contains(&t0) {
        return domain(format!("t0 must lie in [0, 1), got {t0}"));
    }
    if !(q > 0.0 && q < 1.0) {
        return domain(format!("q must lie in (0, 1), got {q}"));
    }
    if !(c1 >= 0.0) || !c1.is_finite() {
        return domain(format!("c1 must be non-negative, got {c1}"));
    }
    let span = 1.0 - t0;
    let (zero_design, q_design) = if c1 == 0.0 {
        (vec![0.0; grid.len()], vec![0.0; grid.len()])
    } else {
        let zero_alt = LineAlternative::new(0.0, 0.0, c1 * span)?;
        let q_alt = LineAlternative::new(q, 0.0, c1 * span / (1.0 - q))?;
        (
            trend_general(&zero_alt, grid, quad)?.values().to_vec(),
            trend_general(&q_alt, grid, quad)?.values().to_vec(),
        )
    };
    let verdict = compare_curves(&zero_design, &q_design, LINE_COMPARE_TOLERANCE);
    Ok(LineComparison {
        t0,
        q,
        c1,
        grid: grid.to_vec(),
        zero_design,
        q_design,
        verdict,
    })
}

/// The `n`-point q-design of [`line_design_compare`]: `round(q n)` points evenly
/// spread on `[0, t0]`, the rest on `(t0, 1]`. With `q = 0` this is the 0-design.
pub fn line_q_design(n: usize, t0: f64, q: f64) -> Result<Design> {
    if !(0.0..1.0).contains(&t0) || !(0.0..1.0).contains(&q) {
        return domain("need t0 in [0, 1) and q in [0, 1)");
    }
    if n < 2 {
        return domain("design needs at least two points");
    }
    let s = (q * n as f64).round() as usize;
    let mut points = spread_up_to(t0, s);
    points.extend(spread_above(t0, n - s));
    Design::new(points)
}
