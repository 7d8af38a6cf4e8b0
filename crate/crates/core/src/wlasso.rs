//! Weighted Lasso by cyclic coordinate descent.
//!
//! Minimizes
//!
//! ```text
//! Q(b0, beta) = (1/2n) sum_i v_i (y_i - b0 - x_i . beta)^2 + lambda ||beta||_1
//! ```
//!
//! where `b0` is an optional unpenalized intercept. The intercept is handled by
//! weighted centering: each column is centered at its `v`-weighted mean and the
//! residual is kept `v`-orthogonal to the constant, which makes the intercept
//! exactly optimal for the current `beta` at every step.
//!
//! Each coordinate update is the exact one-dimensional minimizer
//! `beta_j = S(z_j, lambda) / u_j` with the `1/n`-normalized quantities
//! `z_j = (1/n) sum v_i x_ij r_ij` and `u_j = (1/n) sum v_i x_ij^2`.

use crate::dataset::Dataset;
use crate::error::{invalid, mismatch, Result, SolverError};

/// Columns whose weighted curvature `u_j` falls at or below this are frozen at zero.
pub const DEGENERATE_CURVATURE: f64 = 1e-12;

/// `sign(z) * max(|z| - gamma, 0)`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// A weighted Lasso instance over a borrowed dataset.
#[derive(Debug, Clone, Copy)]
pub struct WeightedProblem<'a> {
    data: &'a Dataset,
    weights: &'a [f64],
    lambda: f64,
    intercept: bool,
}

impl<'a> WeightedProblem<'a> {
    pub fn new(data: &'a Dataset, weights: &'a [f64], lambda: f64, intercept: bool) -> Result<Self> {
        if weights.len() != data.n() {
            return Err(mismatch(format!(
                "{} weights for {} observations",
                weights.len(),
                data.n()
            )));
        }
        // Weights may underflow to exactly zero for gross outliers.
        if let Some(i) = weights.iter().position(|w| !(*w >= 0.0 && *w <= 1.0)) {
            return Err(invalid(format!(
                "weight {} is {}, expected a value in [0, 1]",
                i, weights[i]
            )));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be nonnegative, got {}", lambda)));
        }
        Ok(WeightedProblem {
            data,
            weights,
            lambda,
            intercept,
        })
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn weights(&self) -> &'a [f64] {
        self.weights
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn intercept(&self) -> bool {
        self.intercept
    }

    /// `Q(b0, beta)`, evaluated from scratch.
    pub fn objective(&self, beta: &[f64], intercept: f64) -> Result<f64> {
        let r = self.data.residuals(beta, self.effective_intercept(intercept))?;
        let n = self.data.n() as f64;
        let fit: f64 = r
            .iter()
            .zip(self.weights)
            .map(|(r, v)| v * r * r)
            .sum::<f64>()
            / (2.0 * n);
        Ok(fit + self.lambda * beta.iter().map(|b| b.abs()).sum::<f64>())
    }

    fn effective_intercept(&self, b0: f64) -> f64 {
        if self.intercept {
            b0
        } else {
            0.0
        }
    }
}

/// Smallest penalty at which `beta = 0` solves the weighted problem:
/// `max_j |(1/n) sum v_i x_ij (y_i - ybar_v)|`, with `ybar_v` the weighted mean of
/// `y` when an intercept is fitted and zero otherwise.
pub fn lambda_max(data: &Dataset, weights: &[f64], intercept: bool) -> Result<f64> {
    let prob = WeightedProblem::new(data, weights, 0.0, intercept)?;
    // same arithmetic as the first coordinate update from zero, so a solve at
    // this penalty leaves every coefficient exactly at zero
    let cd = CoordinateDescent::new(prob, None)?;
    let n = data.n() as f64;
    Ok((0..data.p())
        .filter(|&j| !cd.degenerate[j])
        .map(|j| (cd.correlation(j) / n).abs())
        .fold(0.0, f64::max))
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> Option<f64> {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        Some(values.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>() / total)
    } else {
        None
    }
}

/// Largest violation of the weighted Lasso optimality conditions, recomputed
/// from scratch. For `beta_j != 0` the violation is `|g_j - lambda sign(beta_j)|`,
/// otherwise `max(0, |g_j| - lambda)`, with `g_j = (1/n) sum v_i x_ij r_i`. When an
/// intercept is fitted, `|(1/n) sum v_i r_i|` is included as well.
pub fn kkt_violation(prob: &WeightedProblem<'_>, beta: &[f64], intercept: f64) -> Result<f64> {
    let d = prob.data;
    let r = d.residuals(beta, prob.effective_intercept(intercept))?;
    let vr: Vec<f64> = r.iter().zip(prob.weights).map(|(r, v)| v * r).collect();
    let n = d.n() as f64;
    let mut worst: f64 = 0.0;
    for (j, &b) in beta.iter().enumerate() {
        let g = crate::dataset::dot(d.x().col(j), &vr) / n;
        worst = worst.max(subgradient_gap(g, b, prob.lambda));
    }
    if prob.intercept {
        worst = worst.max((vr.iter().sum::<f64>() / n).abs());
    }
    Ok(worst)
}

/// Distance of the correlation `g` from `lambda * d|b|`.
#[inline]
pub(crate) fn subgradient_gap(g: f64, b: f64, lambda: f64) -> f64 {
    if b != 0.0 {
        (g - lambda * b.signum()).abs()
    } else {
        (g.abs() - lambda).max(0.0)
    }
}

/// Number of sweeps combined by one Anderson extrapolation step.
const ANDERSON_DEPTH: usize = 5;

/// Solves `A z = b` for a small symmetric positive semi-definite `A` by Cholesky
/// factorization with a relative ridge; `None` when the system is numerically
/// singular.
fn solve_spd(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    let scale = (0..k).map(|i| a[i][i]).fold(0.0, f64::max);
    if !(scale > 0.0 && scale.is_finite()) {
        return None;
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += 1e-10 * scale;
    }
    for j in 0..k {
        let mut d = a[j][j];
        for m in 0..j {
            d -= a[j][m] * a[j][m];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..k {
            let mut s = a[i][j];
            for m in 0..j {
                s -= a[i][m] * a[j][m];
            }
            a[i][j] = s / d;
        }
    }
    for i in 0..k {
        let mut s = b[i];
        for m in 0..i {
            s -= a[i][m] * b[m];
        }
        b[i] = s / a[i][i];
    }
    for i in (0..k).rev() {
        let mut s = b[i];
        for m in i + 1..k {
            s -= a[m][i] * b[m];
        }
        b[i] = s / a[i][i];
    }
    Some(b)
}

/// Iterate of the coordinate descent: coefficients, intercept and the residual
/// `y - b0 - X beta`, which is updated incrementally.
#[derive(Debug, Clone, PartialEq)]
pub struct CdState {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub residual: Vec<f64>,
}

/// Coordinate descent engine for one [`WeightedProblem`].
#[derive(Debug, Clone)]
pub struct CoordinateDescent<'a> {
    prob: WeightedProblem<'a>,
    col_mean: Vec<f64>,
    curvature: Vec<f64>,
    degenerate: Vec<bool>,
    state: CdState,
}

impl<'a> CoordinateDescent<'a> {
    /// Prepares the solver at `warm_start` (zeros when absent). Degenerate
    /// columns are set to zero immediately.
    pub fn new(prob: WeightedProblem<'a>, warm_start: Option<(&[f64], f64)>) -> Result<Self> {
        let d = prob.data;
        let (n, p) = (d.n(), d.p());
        let nf = n as f64;
        let v = prob.weights;
        let total_weight: f64 = v.iter().sum();
        let mut col_mean = vec![0.0; p];
        let mut curvature = vec![0.0; p];
        for j in 0..p {
            let x = d.x().col(j);
            let m = if prob.intercept && total_weight > 0.0 {
                crate::dataset::dot(x, v) / total_weight
            } else {
                0.0
            };
            col_mean[j] = m;
            curvature[j] = x
                .iter()
                .zip(v)
                .map(|(x, v)| v * (x - m) * (x - m))
                .sum::<f64>()
                / nf;
        }
        let degenerate: Vec<bool> = curvature.iter().map(|u| *u <= DEGENERATE_CURVATURE).collect();

        let (mut beta, mut b0) = match warm_start {
            Some((b, b0)) => {
                d.check_beta(b)?;
                (b.to_vec(), if prob.intercept { b0 } else { 0.0 })
            }
            None => (vec![0.0; p], 0.0),
        };
        for (b, deg) in beta.iter_mut().zip(&degenerate) {
            if *deg {
                *b = 0.0;
            }
        }
        let mut residual = d.residuals(&beta, b0)?;
        if prob.intercept {
            if let Some(c) = weighted_mean(&residual, v) {
                residual.iter_mut().for_each(|r| *r -= c);
                b0 += c;
            }
        }
        Ok(CoordinateDescent {
            prob,
            col_mean,
            curvature,
            degenerate,
            state: CdState {
                beta,
                intercept: b0,
                residual,
            },
        })
    }

    pub fn state(&self) -> &CdState {
        &self.state
    }

    pub fn into_state(self) -> CdState {
        self.state
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|d| **d).count()
    }

    /// Normalized weighted curvature `u_j` of column `j` (after weighted centering
    /// when an intercept is fitted).
    pub fn curvature(&self, j: usize) -> f64 {
        self.curvature[j]
    }

    /// Exact minimization over `beta_j` with all other coordinates fixed.
    /// Returns the absolute change of `beta_j`.
    pub fn update_coordinate(&mut self, j: usize) -> Result<f64> {
        let u = self.curvature[j];
        if u <= DEGENERATE_CURVATURE {
            return Err(SolverError::DegenerateColumn(format!(
                "column {} has weighted curvature {:e}",
                j, u
            )));
        }
        Ok(self.update_unchecked(j))
    }

    /// `sum_i v_i (x_ij - m_j) r_i` at the current residual.
    #[inline]
    fn correlation(&self, j: usize) -> f64 {
        let x = self.prob.data.x().col(j);
        let v = self.prob.weights;
        let m = self.col_mean[j];
        let r = &self.state.residual;
        if m == 0.0 {
            x.iter().zip(v).zip(r.iter()).map(|((x, v), r)| v * x * r).sum()
        } else {
            x.iter()
                .zip(v)
                .zip(r.iter())
                .map(|((x, v), r)| v * (x - m) * r)
                .sum()
        }
    }

    #[inline]
    fn update_unchecked(&mut self, j: usize) -> f64 {
        let x = self.prob.data.x().col(j);
        let m = self.col_mean[j];
        let u = self.curvature[j];
        let n = x.len() as f64;
        let old = self.state.beta[j];
        let z = self.correlation(j) / n + u * old;
        let r = &mut self.state.residual;
        let mut new = soft_threshold(z, self.prob.lambda) / u;
        // a move of a few ulps only reflects rounding in the recomputed correlation
        if (new - old).abs() <= 4.0 * f64::EPSILON * old.abs() {
            new = old;
        }
        let delta = new - old;
        if delta != 0.0 {
            if m == 0.0 {
                r.iter_mut().zip(x).for_each(|(r, x)| *r -= x * delta);
            } else {
                r.iter_mut().zip(x).for_each(|(r, x)| *r -= (x - m) * delta);
                self.state.intercept -= m * delta;
            }
            self.state.beta[j] = new;
        }
        delta.abs()
    }

    fn sweep_all(&mut self) -> f64 {
        let mut max_change: f64 = 0.0;
        for j in 0..self.curvature.len() {
            if !self.degenerate[j] {
                max_change = max_change.max(self.update_unchecked(j));
            }
        }
        max_change
    }

    fn sweep_active(&mut self, active: &[usize]) -> f64 {
        let mut max_change: f64 = 0.0;
        for &j in active {
            max_change = max_change.max(self.update_unchecked(j));
        }
        max_change
    }

    fn active_set(&self) -> Vec<usize> {
        self.state
            .beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    fn active_values(&self, active: &[usize]) -> Vec<f64> {
        active.iter().map(|&j| self.state.beta[j]).collect()
    }

    fn objective_at(&self, beta: &[f64], residual: &[f64]) -> f64 {
        let n = residual.len() as f64;
        let fit: f64 = residual
            .iter()
            .zip(self.prob.weights)
            .map(|(r, v)| v * r * r)
            .sum::<f64>();
        fit / (2.0 * n) + self.prob.lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    /// Anderson extrapolation of the last active-set sweeps. The extrapolated
    /// point replaces the iterate only if it lowers the objective, so descent is
    /// preserved.
    fn try_extrapolation(&mut self, active: &[usize], history: &[Vec<f64>]) {
        let k = history.len() - 1;
        let diffs: Vec<Vec<f64>> = (0..k)
            .map(|i| history[i + 1].iter().zip(&history[i]).map(|(a, b)| a - b).collect())
            .collect();
        let mut gram = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in 0..=a {
                let g = crate::dataset::dot(&diffs[a], &diffs[b]);
                gram[a][b] = g;
                gram[b][a] = g;
            }
        }
        let Some(z) = solve_spd(gram, vec![1.0; k]) else {
            return;
        };
        let total: f64 = z.iter().sum();
        if !(total.is_finite() && total != 0.0) {
            return;
        }
        let mut beta = self.state.beta.clone();
        for (pos, &j) in active.iter().enumerate() {
            beta[j] = (0..k).map(|i| z[i] / total * history[i + 1][pos]).sum();
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return;
        }
        let d = self.prob.data;
        let mut residual = d.residuals(&beta, 0.0).expect("state has the right dimension");
        let mut b0 = 0.0;
        if self.prob.intercept {
            match weighted_mean(&residual, self.prob.weights) {
                Some(c) => {
                    residual.iter_mut().for_each(|r| *r -= c);
                    b0 = c;
                }
                None => return,
            }
        }
        let current = self.objective_at(&self.state.beta, &self.state.residual);
        if self.objective_at(&beta, &residual) < current {
            self.state = CdState {
                beta,
                intercept: b0,
                residual,
            };
        }
    }

    /// KKT violation using the maintained residual.
    fn kkt_incremental(&self) -> f64 {
        let v = self.prob.weights;
        let r = &self.state.residual;
        let vr: Vec<f64> = r.iter().zip(v).map(|(r, v)| v * r).collect();
        let n = r.len() as f64;
        let mut worst: f64 = 0.0;
        for (j, &b) in self.state.beta.iter().enumerate() {
            let g = crate::dataset::dot(self.prob.data.x().col(j), &vr) / n;
            worst = worst.max(subgradient_gap(g, b, self.prob.lambda));
        }
        if self.prob.intercept {
            worst = worst.max((vr.iter().sum::<f64>() / n).abs());
        }
        worst
    }

    /// Replaces the maintained residual with `y - b0 - X beta` computed from
    /// scratch and returns the largest discrepancy that was corrected.
    pub fn recompute_residual(&mut self) -> f64 {
        let fresh = self
            .prob
            .data
            .residuals(&self.state.beta, self.state.intercept)
            .expect("state has the right dimension");
        let drift = fresh
            .iter()
            .zip(&self.state.residual)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        self.state.residual = fresh;
        drift
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSolution {
    pub beta: Vec<f64>,
    pub intercept: f64,
    /// Largest KKT violation at the returned point, recomputed from scratch.
    pub kkt_residual: f64,
    /// Number of sweeps (full or active-set) performed.
    pub iterations: usize,
    pub converged: bool,
    pub degenerate_columns: usize,
}

/// Solves the weighted Lasso to tolerance `tol`.
///
/// A full cyclic sweep is followed by sweeps over the nonzero coordinates until
/// they settle, then another full sweep. The solver stops once a full sweep moves
/// no coordinate by more than `tol` and the KKT violation is at most `10 * tol`.
/// If `max_iter` sweeps are exhausted the current iterate is returned with
/// `converged == false`.
pub fn solve_weighted_lasso(
    prob: &WeightedProblem<'_>,
    warm_start: Option<(&[f64], f64)>,
    tol: f64,
    max_iter: usize,
) -> Result<WeightedSolution> {
    if !(tol > 0.0) {
        return Err(invalid(format!("coordinate descent tolerance must be positive, got {}", tol)));
    }
    if max_iter == 0 {
        return Err(invalid("coordinate descent needs at least one sweep"));
    }
    let mut cd = CoordinateDescent::new(*prob, warm_start)?;
    let kkt_target = 10.0 * tol;
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_iter {
        let change = cd.sweep_all();
        sweeps += 1;
        if change <= tol {
            if cd.kkt_incremental() <= kkt_target {
                converged = true;
                break;
            }
            // Accumulated drift in the residual can stall progress.
            cd.recompute_residual();
            continue;
        }
        let active = cd.active_set();
        let mut history: Vec<Vec<f64>> = vec![cd.active_values(&active)];
        while sweeps < max_iter {
            let change = cd.sweep_active(&active);
            sweeps += 1;
            if change <= tol {
                break;
            }
            history.push(cd.active_values(&active));
            if history.len() == ANDERSON_DEPTH + 1 {
                cd.try_extrapolation(&active, &history);
                history.clear();
                history.push(cd.active_values(&active));
            }
        }
    }
    let degenerate_columns = cd.degenerate_count();
    let state = cd.into_state();
    let kkt_residual = kkt_violation(prob, &state.beta, state.intercept)?;
    Ok(WeightedSolution {
        beta: state.beta,
        intercept: if prob.intercept { state.intercept } else { 0.0 },
        kkt_residual,
        iterations: sweeps,
        converged,
        degenerate_columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Matrix;
    use crate::error::ErrorKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn toy() -> Dataset {
        Dataset::new(Matrix::from_columns(&[vec![1.0, 1.0]]).unwrap(), vec![2.0, 0.0]).unwrap()
    }

    fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
        let x = Matrix::from_col_major(n, p, x).unwrap();
        let mut beta = vec![0.0; p];
        for b in beta.iter_mut().take(3.min(p)) {
            *b = rng.random_range(-2.0..2.0);
        }
        let mut y = x.mul_vec(&beta);
        for v in y.iter_mut() {
            *v += 0.5 * rng.sample::<f64, _>(StandardNormal) + 1.0;
        }
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(0.0, 0.0), 0.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
    }

    #[test]
    fn univariate_closed_form() {
        let d = toy();
        let w = [1.0, 1.0];
        let prob = WeightedProblem::new(&d, &w, 0.5, false).unwrap();
        let mut cd = CoordinateDescent::new(prob, None).unwrap();
        cd.update_coordinate(0).unwrap();
        assert_eq!(cd.state().beta, vec![0.5]);
        assert_eq!(cd.state().residual, vec![1.5, -0.5]);

        for lambda in [1.0, 1.5, 10.0] {
            let prob = WeightedProblem::new(&d, &w, lambda, false).unwrap();
            let mut cd = CoordinateDescent::new(prob, None).unwrap();
            cd.update_coordinate(0).unwrap();
            assert_eq!(cd.state().beta, vec![0.0]);
        }

        // No penalty: least squares coefficient z/u = 1.
        let prob = WeightedProblem::new(&d, &w, 0.0, false).unwrap();
        let mut cd = CoordinateDescent::new(prob, None).unwrap();
        cd.update_coordinate(0).unwrap();
        assert_eq!(cd.state().beta, vec![1.0]);
    }

    #[test]
    fn degenerate_column_is_reported_by_single_update_and_frozen_by_solver() {
        let x = Matrix::from_columns(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 0.0]]).unwrap();
        let d = Dataset::new(x, vec![1.0, 5.0, 2.0]).unwrap();
        let w = [1.0, 0.0, 1.0];
        let prob = WeightedProblem::new(&d, &w, 0.01, false).unwrap();
        let mut cd = CoordinateDescent::new(prob, Some((&[0.0, 4.0], 0.0))).unwrap();
        assert_eq!(cd.state().beta[1], 0.0);
        let err = cd.update_coordinate(1).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::DegenerateColumn);
        let sol = solve_weighted_lasso(&prob, None, 1e-10, 1000).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.beta[1], 0.0);
        assert_eq!(sol.degenerate_columns, 1);
    }

    #[test]
    fn lambda_max_examples() {
        let d = toy();
        assert_eq!(lambda_max(&d, &[1.0, 1.0], false).unwrap(), 1.0);
        let zero = Dataset::new(d.x().clone(), vec![0.0, 0.0]).unwrap();
        assert_eq!(lambda_max(&zero, &[1.0, 1.0], false).unwrap(), 0.0);

        let d = random_dataset(30, 8, 4);
        let w: Vec<f64> = (0..30).map(|i| 0.2 + 0.8 * (i as f64 / 29.0)).collect();
        for intercept in [false, true] {
            let base = lambda_max(&d, &w, intercept).unwrap();
            let scaled_y: Vec<f64> = d.y().iter().map(|v| -3.0 * v).collect();
            let scaled = Dataset::new(d.x().clone(), scaled_y).unwrap();
            let lm = lambda_max(&scaled, &w, intercept).unwrap();
            assert!((lm - 3.0 * base).abs() <= 1e-12 * lm);
        }
    }

    #[test]
    fn solution_is_zero_at_lambda_max() {
        for intercept in [false, true] {
            let d = random_dataset(40, 15, 7);
            let w: Vec<f64> = (0..40).map(|i| if i % 3 == 0 { 0.3 } else { 1.0 }).collect();
            let lm = lambda_max(&d, &w, intercept).unwrap();
            let prob = WeightedProblem::new(&d, &w, lm, intercept).unwrap();
            let sol = solve_weighted_lasso(&prob, None, 1e-9, 10_000).unwrap();
            assert!(sol.beta.iter().all(|b| *b == 0.0));
            assert!(sol.converged);
            // Just below lambda_max something enters.
            let prob = WeightedProblem::new(&d, &w, 0.99 * lm, intercept).unwrap();
            let sol = solve_weighted_lasso(&prob, None, 1e-9, 10_000).unwrap();
            assert!(sol.beta.iter().any(|b| *b != 0.0));
        }
    }

    #[test]
    fn single_column_solver_matches_closed_form() {
        let d = toy();
        for (lambda, expect) in [(0.0, 1.0), (0.25, 0.75), (0.5, 0.5), (1.0, 0.0)] {
            let prob = WeightedProblem::new(&d, &[1.0, 1.0], lambda, false).unwrap();
            let sol = solve_weighted_lasso(&prob, None, 1e-12, 100).unwrap();
            assert_eq!(sol.beta, vec![expect]);
        }
    }

    #[test]
    fn kkt_certificate_and_objective_descent() {
        for (seed, intercept) in [(1, false), (2, true), (3, true)] {
            let d = random_dataset(50, 30, seed);
            let w: Vec<f64> = (0..50).map(|i| ((i * 7919) % 100) as f64 / 100.0 + 0.01).collect();
            let lm = lambda_max(&d, &w, intercept).unwrap();
            let prob = WeightedProblem::new(&d, &w, 0.1 * lm, intercept).unwrap();
            let mut cd = CoordinateDescent::new(prob, None).unwrap();
            let mut last = prob.objective(&cd.state().beta, cd.state().intercept).unwrap();
            for sweep in 0..50 {
                for j in 0..d.p() {
                    cd.update_coordinate(j).unwrap();
                    let obj = prob.objective(&cd.state().beta, cd.state().intercept).unwrap();
                    assert!(obj <= last + 1e-12, "sweep {} coord {}: {} > {}", sweep, j, obj, last);
                    last = obj;
                }
            }
            let sol = solve_weighted_lasso(&prob, None, 1e-8, 10_000).unwrap();
            assert!(sol.converged);
            let check = kkt_violation(&prob, &sol.beta, sol.intercept).unwrap();
            assert!(check <= 1e-7, "kkt {}", check);
            assert_eq!(check, sol.kkt_residual);
        }
    }

    #[test]
    fn residual_drift_stays_small() {
        let d = random_dataset(60, 40, 11);
        let w: Vec<f64> = (0..60).map(|i| 0.05 + (i % 10) as f64 / 10.0).collect();
        let prob = WeightedProblem::new(&d, &w, 0.01, true).unwrap();
        let mut cd = CoordinateDescent::new(prob, None).unwrap();
        for k in 0..10_000 {
            cd.update_coordinate(k % d.p()).unwrap();
        }
        assert!(cd.recompute_residual() <= 1e-8);
    }

    #[test]
    fn column_permutation_gives_same_solution() {
        let d = random_dataset(40, 25, 5);
        let w: Vec<f64> = (0..40).map(|i| 1.0 - (i as f64) / 80.0).collect();
        let perm: Vec<usize> = (0..25).rev().collect();
        let pd = Dataset::new(d.x().select_columns(&perm), d.y().to_vec()).unwrap();
        let lam = 0.05;
        let a = solve_weighted_lasso(&WeightedProblem::new(&d, &w, lam, true).unwrap(), None, 1e-12, 100_000).unwrap();
        let b = solve_weighted_lasso(&WeightedProblem::new(&pd, &w, lam, true).unwrap(), None, 1e-12, 100_000).unwrap();
        for (k, &j) in perm.iter().enumerate() {
            assert!((a.beta[j] - b.beta[k]).abs() < 1e-9);
            assert_eq!(a.beta[j] == 0.0, b.beta[k] == 0.0);
        }
        assert!((a.intercept - b.intercept).abs() < 1e-9);
    }

    #[test]
    fn invalid_inputs() {
        let d = toy();
        assert_eq!(
            WeightedProblem::new(&d, &[1.0], 0.1, false).unwrap_err().kind(),
            ErrorKind::DimensionMismatch
        );
        assert_eq!(
            WeightedProblem::new(&d, &[1.0, 1.5], 0.1, false).unwrap_err().kind(),
            ErrorKind::InvalidConfig
        );
        assert_eq!(
            WeightedProblem::new(&d, &[1.0, 1.0], -0.1, false).unwrap_err().kind(),
            ErrorKind::InvalidConfig
        );
        let prob = WeightedProblem::new(&d, &[1.0, 1.0], 0.1, false).unwrap();
        assert_eq!(
            solve_weighted_lasso(&prob, None, 0.0, 10).unwrap_err().kind(),
            ErrorKind::InvalidConfig
        );
    }

    #[test]
    fn iteration_cap_returns_iterate_unconverged() {
        let d = random_dataset(30, 20, 9);
        let w = vec![1.0; 30];
        let prob = WeightedProblem::new(&d, &w, 0.001, true).unwrap();
        let sol = solve_weighted_lasso(&prob, None, 1e-14, 1).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
    }
}
