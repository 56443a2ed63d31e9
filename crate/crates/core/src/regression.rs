//! Recursive least squares and recursive residuals.
//!
//! For observations `y_1, ..., y_n` at design points `t_1 <= ... <= t_n` and a
//! regression basis `f = (f_1, ..., f_d)`, the recursive residual at step `i > d` is
//! the one-step-ahead prediction error of the least-squares fit on the first
//! `i - 1` observations, standardized by
//! `sqrt(1 + f(t_i)' (X_{i-1}' X_{i-1})^{-1} f(t_i))`.
//!
//! [`RecursionState`] keeps the running inverse Gram matrix and coefficient
//! estimate and advances both with a rank-one update, so each step costs `O(d^2)`.
//! [`batch_ols`] refits from scratch and serves as a cross-check.
//!
//! Both keep `X'X` and `X'y` in double-double precision and polish the
//! coefficients by iterative refinement, so they agree with the exact
//! least-squares solution even for badly conditioned early prefixes.

use nalgebra::{DMatrix, DVector};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Relative pivot tolerance for the initial `d x d` design matrix.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

const MAX_REFINEMENT_STEPS: usize = 4;
const REFINEMENT_TOLERANCE: f64 = 4.0 * f64::EPSILON;

/// `X'X` and `X'y` accumulated in double-double precision.
#[derive(Debug, Clone, PartialEq)]
struct NormalEquations {
    dimension: usize,
    gram: Vec<TwoFloat>,
    moment: Vec<TwoFloat>,
}

impl NormalEquations {
    fn new(dimension: usize) -> Self {
        Self {
            dimension,
            gram: vec![TwoFloat::from(0.0); dimension * dimension],
            moment: vec![TwoFloat::from(0.0); dimension],
        }
    }

    fn add(&mut self, features: &[f64], y: f64) {
        let d = self.dimension;
        for i in 0..d {
            self.moment[i] += TwoFloat::new_mul(features[i], y);
            for j in 0..d {
                self.gram[i * d + j] += TwoFloat::new_mul(features[i], features[j]);
            }
        }
    }

    /// `X'y - X'X beta`, rounded to `f64` only at the end.
    fn residual(&self, beta: &[f64], out: &mut [f64]) {
        let rows = self.gram.chunks_exact(self.dimension);
        for ((slot, row), &m) in out.iter_mut().zip(rows).zip(&self.moment) {
            let mut r = m;
            for (&g, &b) in row.iter().zip(beta) {
                r -= g * b;
            }
            *slot = f64::from(r);
        }
    }

    fn gram_f64(&self) -> Vec<f64> {
        self.gram.iter().map(|&g| f64::from(g)).collect()
    }
}

/// The known regression functions `f_1, ..., f_d`.
pub trait Basis: Sync {
    fn dimension(&self) -> usize;

    /// Writes `f(t)` into `out`, which has length [`Basis::dimension`].
    fn evaluate_into(&self, t: f64, out: &mut [f64]);

    fn evaluate(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        self.evaluate_into(t, &mut out);
        out
    }
}

/// Monomials `1, t, ..., t^degree`. Degree 0 is the constant model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Polynomial {
    degree: usize,
}

impl Polynomial {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }

    pub fn constant() -> Self {
        Self::new(0)
    }

    pub fn line() -> Self {
        Self::new(1)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }
}

impl Basis for Polynomial {
    fn dimension(&self) -> usize {
        self.degree + 1
    }

    fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        let mut power = 1.0;
        for slot in out.iter_mut() {
            *slot = power;
            power *= t;
        }
    }
}

/// A basis given by a closure.
pub struct FnBasis<F> {
    dimension: usize,
    f: F,
}

impl<F> FnBasis<F>
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    pub fn new(dimension: usize, f: F) -> Self {
        assert!(dimension >= 1, "basis dimension must be positive");
        Self { dimension, f }
    }
}

impl<F> Basis for FnBasis<F>
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        (self.f)(t, out)
    }
}

/// Design points with their responses.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationStream {
    points: Vec<f64>,
    responses: Vec<f64>,
}

impl ObservationStream {
    pub fn new(points: Vec<f64>, responses: Vec<f64>) -> Result<Self> {
        if points.len() != responses.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                actual: responses.len(),
            });
        }
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        if points.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Domain("design points must lie in [0, 1]".into()));
        }
        if points.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain("design points must be sorted".into()));
        }
        Ok(Self { points, responses })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }
}

/// The pieces of one recursive residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Innovation {
    /// `y - f(t)' beta_hat` using the fit before this observation.
    pub prediction_error: f64,
    /// `sqrt(1 + f(t)' (X'X)^{-1} f(t))`, always at least 1.
    pub scale: f64,
    pub residual: f64,
}

/// Running least-squares fit: observation count, `(X'X)^{-1}` and `beta_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionState {
    count: usize,
    dimension: usize,
    // row-major d x d
    inv_gram: Vec<f64>,
    beta_hat: Vec<f64>,
    normal: NormalEquations,
    features: Vec<f64>,
    gain: Vec<f64>,
}

impl RecursionState {
    /// Exact fit on the first `d` observations.
    pub fn init<B: Basis + ?Sized>(basis: &B, points: &[f64], responses: &[f64]) -> Result<Self> {
        let d = basis.dimension();
        if points.len() != d || responses.len() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                actual: points.len().min(responses.len()),
            });
        }
        let mut design = DMatrix::<f64>::zeros(d, d);
        let mut row = vec![0.0; d];
        for (i, &t) in points.iter().enumerate() {
            basis.evaluate_into(t, &mut row);
            for (j, &v) in row.iter().enumerate() {
                design[(i, j)] = v;
            }
        }

        let max_row_norm = design.row_iter().map(|r| r.norm()).fold(0.0_f64, f64::max);
        let tolerance = PIVOT_TOLERANCE * max_row_norm;
        let lu = design.clone().lu();
        let min_pivot = lu
            .u()
            .diagonal()
            .iter()
            .map(|p| p.abs())
            .fold(f64::INFINITY, f64::min);
        if !(min_pivot >= tolerance) || min_pivot == 0.0 {
            return Err(Error::SingularInitialDesign {
                dimension: d,
                pivot: min_pivot,
                tolerance,
            });
        }
        let inv_design = lu.try_inverse().ok_or(Error::SingularInitialDesign {
            dimension: d,
            pivot: min_pivot,
            tolerance,
        })?;
        let beta = &inv_design * DVector::from_column_slice(responses);
        let inv_gram = &inv_design * inv_design.transpose();

        let mut state = Self {
            count: d,
            dimension: d,
            inv_gram: vec![0.0; d * d],
            beta_hat: beta.iter().copied().collect(),
            normal: NormalEquations::new(d),
            features: vec![0.0; d],
            gain: vec![0.0; d],
        };
        for (i, &y) in responses.iter().enumerate() {
            for j in 0..d {
                state.features[j] = design[(i, j)];
            }
            state.normal.add(&state.features, y);
        }
        for i in 0..d {
            for j in 0..d {
                state.inv_gram[i * d + j] = inv_gram[(i, j)];
            }
        }
        state.symmetrize();
        Ok(state)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn beta_hat(&self) -> &[f64] {
        &self.beta_hat
    }

    /// Row-major `(X'X)^{-1}`.
    pub fn inv_gram(&self) -> &[f64] {
        &self.inv_gram
    }

    /// Fitted value `f(t)' beta_hat`.
    pub fn predict<B: Basis + ?Sized>(&self, basis: &B, t: f64) -> f64 {
        let f = basis.evaluate(t);
        dot(&f, &self.beta_hat)
    }

    /// Consumes the next observation and returns its recursive residual.
    pub fn update<B: Basis + ?Sized>(&mut self, basis: &B, t: f64, y: f64) -> Innovation {
        let d = self.dimension;
        basis.evaluate_into(t, &mut self.features);

        // gain = P f
        for i in 0..d {
            let row = &self.inv_gram[i * d..(i + 1) * d];
            self.gain[i] = dot(row, &self.features);
        }
        let leverage = dot(&self.features, &self.gain);
        let denom_sq = 1.0 + leverage.max(0.0);
        let prediction_error = y - dot(&self.features, &self.beta_hat);
        let scale = denom_sq.sqrt();

        // Sherman-Morrison: P <- P - (P f)(P f)' / (1 + f'Pf)
        let step = prediction_error / denom_sq;
        for i in 0..d {
            self.beta_hat[i] += self.gain[i] * step;
            let gi = self.gain[i] / denom_sq;
            for j in 0..d {
                self.inv_gram[i * d + j] -= gi * self.gain[j];
            }
        }
        self.symmetrize();
        self.normal.add(&self.features, y);
        self.refine();
        self.count += 1;

        Innovation {
            prediction_error,
            scale,
            residual: prediction_error / scale,
        }
    }

    /// Iterative refinement, `beta += P (X'y - X'X beta)` with the residual
    /// taken in double-double precision.
    ///
    /// The rank-one updates alone lose accuracy with the conditioning of `X'X`;
    /// a few `O(d^2)` refinement steps bring `beta_hat` back to the exact
    /// least-squares solution.
    fn refine(&mut self) {
        let d = self.dimension;
        for _ in 0..MAX_REFINEMENT_STEPS {
            self.normal.residual(&self.beta_hat, &mut self.gain);
            let mut change = 0.0_f64;
            let mut size = 0.0_f64;
            for i in 0..d {
                let row = &self.inv_gram[i * d..(i + 1) * d];
                let delta = dot(row, &self.gain);
                self.beta_hat[i] += delta;
                change = change.max(delta.abs());
                size = size.max(self.beta_hat[i].abs());
            }
            if change <= REFINEMENT_TOLERANCE * size {
                break;
            }
        }
    }

    fn symmetrize(&mut self) {
        let d = self.dimension;
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (self.inv_gram[i * d + j] + self.inv_gram[j * d + i]);
                self.inv_gram[i * d + j] = avg;
                self.inv_gram[j * d + i] = avg;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// All `n - d` recursive residuals of a stream.
pub fn batch_residuals<B: Basis + ?Sized>(
    stream: &ObservationStream,
    basis: &B,
) -> Result<Vec<f64>> {
    let d = basis.dimension();
    let n = stream.len();
    if n <= d {
        return Err(Error::Domain(format!(
            "need more than {d} observations, got {n}"
        )));
    }
    let (t, y) = (stream.points(), stream.responses());
    let mut state = RecursionState::init(basis, &t[..d], &y[..d])?;
    Ok((d..n)
        .map(|i| state.update(basis, t[i], y[i]).residual)
        .collect())
}

/// Ordinary least squares via the normal equations.
pub fn batch_ols<B: Basis + ?Sized>(
    points: &[f64],
    responses: &[f64],
    basis: &B,
) -> Result<Vec<f64>> {
    let d = basis.dimension();
    if points.len() != responses.len() {
        return Err(Error::LengthMismatch {
            expected: points.len(),
            actual: responses.len(),
        });
    }
    if points.len() < d {
        return Err(Error::SingularDesign);
    }
    let mut normal = NormalEquations::new(d);
    let mut f = vec![0.0; d];
    for (&t, &y) in points.iter().zip(responses) {
        basis.evaluate_into(t, &mut f);
        normal.add(&f, y);
    }
    let gram = DMatrix::from_row_slice(d, d, &normal.gram_f64());
    let diagonal = gram.diagonal();
    let chol = gram.cholesky().ok_or(Error::SingularDesign)?;
    // squared Cholesky pivot over the column's own norm is 1 - R^2 against earlier columns
    let l = chol.l_dirty();
    for i in 0..d {
        if !(l[(i, i)] * l[(i, i)] > PIVOT_TOLERANCE * diagonal[i]) {
            return Err(Error::SingularDesign);
        }
    }
    let mut beta = vec![0.0; d];
    let mut residual = vec![0.0; d];
    for _ in 0..MAX_REFINEMENT_STEPS + 1 {
        normal.residual(&beta, &mut residual);
        let delta = chol.solve(&DVector::from_column_slice(&residual));
        let mut change = 0.0_f64;
        let mut size = 0.0_f64;
        for (b, dlt) in beta.iter_mut().zip(delta.iter()) {
            *b += dlt;
            change = change.max(dlt.abs());
            size = size.max(b.abs());
        }
        if change <= REFINEMENT_TOLERANCE * size {
            break;
        }
    }
    Ok(beta)
}

/// Root mean square of the recursive residuals, a consistent estimate of the
/// error standard deviation under the null model.
pub fn estimate_sigma(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mean_sq = residuals.iter().map(|e| e * e).sum::<f64>() / residuals.len() as f64;
    Ok(mean_sq.sqrt())
}

/// Divides every residual by `sigma`. Opt-in; nothing in the crate applies it implicitly.
pub fn studentize(residuals: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::Domain("sigma must be positive".into()));
    }
    Ok(residuals.iter().map(|e| e / sigma).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn init_constant_model() {
        let s = RecursionState::init(&Polynomial::constant(), &[0.0], &[5.0]).unwrap();
        assert_eq!(s.beta_hat(), &[5.0]);
        assert_eq!(s.inv_gram(), &[1.0]);
        assert_eq!(s.count(), 1);

        let s = RecursionState::init(&Polynomial::constant(), &[0.3], &[-2.0]).unwrap();
        assert_eq!(s.beta_hat(), &[-2.0]);
    }

    #[test]
    fn duplicate_initial_points_are_singular() {
        let err = RecursionState::init(&Polynomial::line(), &[0.0, 0.0], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(
            err,
            Error::SingularInitialDesign { dimension: 2, .. }
        ));
    }

    #[test]
    fn nearly_coincident_points_are_singular() {
        let err = RecursionState::init(&Polynomial::line(), &[0.5, 0.5 + 1e-12], &[1.0, 2.0])
            .unwrap_err();
        assert!(matches!(err, Error::SingularInitialDesign { .. }));
        assert!(RecursionState::init(&Polynomial::line(), &[0.5, 0.5 + 1e-6], &[1.0, 2.0]).is_ok());
    }

    #[test]
    fn constant_model_updates() {
        let basis = Polynomial::constant();
        let mut s = RecursionState::init(&basis, &[0.0], &[1.0]).unwrap();
        let first = s.update(&basis, 0.5, 3.0);
        assert_abs_diff_eq!(first.residual, 2.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(first.scale, 2f64.sqrt(), epsilon = 1e-15);
        let second = s.update(&basis, 0.7, 2.0);
        assert_abs_diff_eq!(second.residual, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(second.scale, 1.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(s.count(), 3);
    }

    #[test]
    fn batch_residuals_small_cases() {
        let stream = ObservationStream::new(vec![0.0, 0.4, 0.9], vec![1.0, 3.0, 2.0]).unwrap();
        let r = batch_residuals(&stream, &Polynomial::constant()).unwrap();
        assert_eq!(r.len(), 2);
        assert_abs_diff_eq!(r[0], 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], 0.0, epsilon = 1e-15);

        let flat = ObservationStream::new(vec![0.0, 0.1, 0.2, 0.3], vec![4.0; 4]).unwrap();
        let r = batch_residuals(&flat, &Polynomial::constant()).unwrap();
        assert!(r.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn batch_residuals_needs_more_than_d() {
        let stream = ObservationStream::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert!(batch_residuals(&stream, &Polynomial::line()).is_err());
    }

    #[test]
    fn duplicates_after_init_are_fine() {
        let stream =
            ObservationStream::new(vec![0.0, 1.0, 1.0, 1.0], vec![0.0, 1.0, 1.5, 0.5]).unwrap();
        let r = batch_residuals(&stream, &Polynomial::line()).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|e| e.is_finite()));
    }

    #[test]
    fn stream_validation() {
        assert!(ObservationStream::new(vec![0.2, 0.1], vec![0.0, 0.0]).is_err());
        assert!(ObservationStream::new(vec![0.2, 1.1], vec![0.0, 0.0]).is_err());
        assert!(ObservationStream::new(vec![0.2], vec![0.0, 0.0]).is_err());
        assert!(ObservationStream::new(vec![], vec![]).is_err());
    }

    #[test]
    fn batch_ols_small_cases() {
        let b = batch_ols(&[0.0, 0.5, 1.0], &[1.0, 3.0, 2.0], &Polynomial::constant()).unwrap();
        assert_abs_diff_eq!(b[0], 2.0, epsilon = 1e-15);
        let b = batch_ols(&[0.0, 1.0], &[0.0, 1.0], &Polynomial::line()).unwrap();
        assert_abs_diff_eq!(b[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b[1], 1.0, epsilon = 1e-14);
        assert_eq!(
            batch_ols(&[0.3, 0.3], &[0.0, 1.0], &Polynomial::line()),
            Err(Error::SingularDesign)
        );
    }

    #[test]
    fn sigma_estimates() {
        assert_abs_diff_eq!(
            estimate_sigma(&[2f64.sqrt(), 0.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(estimate_sigma(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(estimate_sigma(&[]), Err(Error::EmptyInput));
        assert_eq!(studentize(&[2.0, -4.0], 2.0).unwrap(), vec![1.0, -2.0]);
        assert!(studentize(&[1.0], 0.0).is_err());
    }

    #[test]
    fn fn_basis_matches_polynomial() {
        let quad = FnBasis::new(3, |t, out: &mut [f64]| {
            out[0] = 1.0;
            out[1] = t;
            out[2] = t * t;
        });
        assert_eq!(quad.evaluate(0.5), Polynomial::new(2).evaluate(0.5));
    }
}
