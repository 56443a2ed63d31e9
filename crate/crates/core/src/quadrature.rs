//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Absolute error target per integration panel.
    pub tolerance: f64,
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_depth: 40,
        }
    }
}

/// Integrates `f` over `[a, b]`, splitting first at every breakpoint inside the
/// interval so no Simpson panel straddles a discontinuity.
pub fn integrate<F>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    config: &QuadratureConfig,
) -> Result<f64>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut total = 0.0;
    let mut left = lo;
    for &p in breakpoints.iter().filter(|&&p| p > lo && p < hi) {
        total += simpson(f, left, p, config)?;
        left = p;
    }
    total += simpson(f, left, hi, config)?;
    Ok(sign * total)
}

fn simpson<F>(f: &F, a: f64, b: f64, config: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    // one-sided limits, so a jump sitting exactly on a panel edge is not sampled
    let fa = f(a.next_up());
    let fb = f(b.next_down());
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(
        f,
        Panel {
            a,
            b,
            fa,
            fm,
            fb,
            whole,
        },
        config.tolerance,
        config.max_depth,
        config.max_depth,
    )
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn refine<F>(f: &F, p: Panel, tolerance: f64, depth: u32, max_depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    let delta = left + right - p.whole;
    if delta.abs() <= 15.0 * tolerance {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure {
            a: p.a,
            b: p.b,
            depth: max_depth,
        });
    }
    let l = Panel {
        a: p.a,
        b: m,
        fa: p.fa,
        fm: flm,
        fb: p.fm,
        whole: left,
    };
    let r = Panel {
        a: m,
        b: p.b,
        fa: p.fm,
        fm: frm,
        fb: p.fb,
        whole: right,
    };
    Ok(refine(f, l, tolerance / 2.0, depth - 1, max_depth)?
        + refine(f, r, tolerance / 2.0, depth - 1, max_depth)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomials_and_transcendentals() {
        let cfg = QuadratureConfig::default();
        assert_abs_diff_eq!(
            integrate(&|x: f64| x * x, 0.0, 1.0, &[], &cfg).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            integrate(&f64::sin, 0.0, std::f64::consts::PI, &[], &cfg).unwrap(),
            2.0,
            epsilon = 1e-11
        );
        assert_abs_diff_eq!(
            integrate(&f64::exp, 1.0, 0.0, &[], &cfg).unwrap(),
            1.0 - std::f64::consts::E,
            epsilon = 1e-11
        );
    }

    #[test]
    fn jumps_are_exact_when_split() {
        let step = |x: f64| if x <= 0.3 { 2.0 } else { -1.0 };
        let cfg = QuadratureConfig::default();
        let v = integrate(&step, 0.0, 1.0, &[0.3], &cfg).unwrap();
        assert_abs_diff_eq!(v, 0.6 - 0.7, epsilon = 1e-14);
    }

    #[test]
    fn reports_failure_at_depth_limit() {
        let cfg = QuadratureConfig {
            tolerance: 1e-15,
            max_depth: 2,
        };
        let err = integrate(&|x: f64| x.sqrt(), 0.0, 1.0, &[], &cfg).unwrap_err();
        assert!(matches!(err, Error::QuadratureFailure { depth: 2, .. }));
    }
}
