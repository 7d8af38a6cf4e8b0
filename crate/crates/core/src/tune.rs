//! Penalty grids, warm-started regularization paths and K-fold
//! cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{FitConfig, FitResult, Init};
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::loss::LossKind;
use crate::mm::fit;
use crate::wlasso::lambda_max;

/// Strictly decreasing positive penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("lambda grid is empty"));
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("lambda grid values must be positive and finite"));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("lambda grid must be strictly decreasing"));
        }
        Ok(LambdaGrid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Smallest-to-largest ratio used when none is given: `1e-3` if `n < p`, else `1e-4`.
pub fn default_ratio(n: usize, p: usize) -> f64 {
    if n < p {
        1e-3
    } else {
        1e-4
    }
}

/// `m` log-spaced penalties from `lambda_max` (all weights one) down to
/// `ratio * lambda_max`.
pub fn make_grid(d: &Dataset, m: usize, ratio: f64, fit_intercept: bool) -> Result<LambdaGrid> {
    if m < 2 {
        return Err(invalid(format!("a lambda grid needs at least 2 values, got {}", m)));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(invalid(format!("lambda ratio must lie in (0, 1), got {}", ratio)));
    }
    let top = lambda_max(d, &vec![1.0; d.n()], fit_intercept)?;
    if !(top > 0.0) {
        return Err(invalid(
            "lambda_max is zero: the response has no correlation with any column",
        ));
    }
    let step = ratio.ln() / (m - 1) as f64;
    let mut values: Vec<f64> = (0..m).map(|i| top * (step * i as f64).exp()).collect();
    values[0] = top;
    values[m - 1] = ratio * top;
    LambdaGrid::new(values)
}

/// Fits every penalty of `grid` in order. The first fit starts from
/// `cfg.init`; each later fit starts from the previous solution.
pub fn fit_path(
    d: &Dataset,
    kind: &LossKind,
    cfg: &FitConfig,
    grid: &LambdaGrid,
) -> Result<Vec<FitResult>> {
    let mut out: Vec<FitResult> = Vec::with_capacity(grid.len());
    for &lambda in grid.values() {
        let mut c = cfg.clone().with_lambda(lambda);
        if let Some(prev) = out.last() {
            c.init = Init::Supplied {
                beta: prev.beta.clone(),
                intercept: Some(prev.intercept),
            };
        }
        out.push(fit(d, kind, &c)?);
    }
    Ok(out)
}

/// Held-out score used by cross-validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CvScore {
    /// Mean squared prediction error.
    Mse,
    /// Mean exponential loss of the prediction errors.
    ExpLoss { tau: f64 },
}

impl CvScore {
    fn score(&self, residuals: impl Iterator<Item = f64>) -> f64 {
        let (mut sum, mut count) = (0.0, 0usize);
        for r in residuals {
            sum += match *self {
                CvScore::Mse => r * r,
                CvScore::ExpLoss { tau } => LossKind::exponential(tau).value(r),
            };
            count += 1;
        }
        sum / count as f64
    }
}

/// Which grid point to report as the selected penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// Minimizer of the mean cross-validation score.
    #[default]
    Min,
    /// Largest penalty within one standard error of the minimum.
    OneSe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub grid: LambdaGrid,
    pub cv_mean: Vec<f64>,
    pub cv_se: Vec<f64>,
    pub index_min: usize,
    pub index_1se: usize,
    pub lambda_min: f64,
    pub lambda_1se: f64,
    pub fold_assignments: Vec<usize>,
}

impl CvResult {
    pub fn selected_index(&self, rule: LambdaRule) -> usize {
        match rule {
            LambdaRule::Min => self.index_min,
            LambdaRule::OneSe => self.index_1se,
        }
    }
}

/// Assigns observations to `k` folds via a seeded random permutation; fold
/// sizes differ by at most one.
pub fn fold_assignments(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        folds[i] = pos % k;
    }
    folds
}

/// K-fold cross-validation of `kind` over `grid`.
pub fn cross_validate(
    d: &Dataset,
    kind: &LossKind,
    cfg: &FitConfig,
    grid: &LambdaGrid,
    k: usize,
    seed: u64,
    score: CvScore,
) -> Result<CvResult> {
    if k < 2 || k > d.n() {
        return Err(invalid(format!(
            "number of folds must lie in [2, n = {}], got {}",
            d.n(),
            k
        )));
    }
    let folds = fold_assignments(d.n(), k, seed);
    cross_validate_with_folds(d, kind, cfg, grid, &folds, score)
}

/// Cross-validation with caller-supplied fold labels `0..k`.
pub fn cross_validate_with_folds(
    d: &Dataset,
    kind: &LossKind,
    cfg: &FitConfig,
    grid: &LambdaGrid,
    folds: &[usize],
    score: CvScore,
) -> Result<CvResult> {
    if folds.len() != d.n() {
        return Err(invalid(format!(
            "{} fold labels for {} observations",
            folds.len(),
            d.n()
        )));
    }
    let k = folds.iter().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(invalid("cross-validation needs at least two folds"));
    }
    if let Some(f) = (0..k).find(|f| !folds.contains(f)) {
        return Err(invalid(format!("fold {} is empty", f)));
    }

    // fold-major table of held-out scores, reduced in fold order below
    let per_fold: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|f| -> Result<Vec<f64>> {
            let train: Vec<usize> = (0..d.n()).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..d.n()).filter(|&i| folds[i] == f).collect();
            let train_set = d.subset(&train);
            let path = fit_path(&train_set, kind, cfg, grid)?;
            Ok(path
                .iter()
                .map(|fit| {
                    score.score(test.iter().map(|&i| {
                        let x = d.x();
                        let pred: f64 = fit
                            .beta
                            .iter()
                            .enumerate()
                            .filter(|(_, b)| **b != 0.0)
                            .map(|(j, b)| x.get(i, j) * b)
                            .sum::<f64>()
                            + fit.intercept;
                        d.y()[i] - pred
                    }))
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let m = grid.len();
    let kf = k as f64;
    let mut cv_mean = vec![0.0; m];
    let mut cv_se = vec![0.0; m];
    for l in 0..m {
        let mean = per_fold.iter().map(|s| s[l]).sum::<f64>() / kf;
        let var = per_fold.iter().map(|s| (s[l] - mean).powi(2)).sum::<f64>() / (kf - 1.0);
        cv_mean[l] = mean;
        cv_se[l] = (var / kf).sqrt();
    }
    let index_min = (0..m)
        .min_by(|&a, &b| cv_mean[a].total_cmp(&cv_mean[b]))
        .expect("grid is nonempty");
    let bound = cv_mean[index_min] + cv_se[index_min];
    // grid is decreasing, so the first qualifying index is the largest lambda
    let index_1se = (0..=index_min)
        .find(|&l| cv_mean[l] <= bound)
        .unwrap_or(index_min);
    Ok(CvResult {
        lambda_min: grid.values()[index_min],
        lambda_1se: grid.values()[index_1se],
        grid: grid.clone(),
        cv_mean,
        cv_se,
        index_min,
        index_1se,
        fold_assignments: folds.to_vec(),
    })
}

/// Cross-validation followed by the full-data path, truncated nowhere, so the
/// selected fit is `path[selected]`.
#[derive(Debug, Clone)]
pub struct CvFit {
    pub cv: CvResult,
    pub path: Vec<FitResult>,
    pub selected: usize,
}

impl CvFit {
    pub fn selected_fit(&self) -> &FitResult {
        &self.path[self.selected]
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cv_fit(
    d: &Dataset,
    kind: &LossKind,
    cfg: &FitConfig,
    grid: &LambdaGrid,
    k: usize,
    seed: u64,
    score: CvScore,
    rule: LambdaRule,
) -> Result<CvFit> {
    let cv = cross_validate(d, kind, cfg, grid, k, seed, score)?;
    let path = fit_path(d, kind, cfg, grid)?;
    let selected = cv.selected_index(rule);
    Ok(CvFit { cv, path, selected })
}

/// `lambda = (4K / sqrt(e tau)) * sqrt(2 log(2p / delta) / n)`.
pub fn theoretical_lambda(k: f64, tau: f64, n: usize, p: usize, delta: f64) -> Result<f64> {
    if !(k > 0.0 && tau > 0.0 && n > 0 && p > 0) {
        return Err(invalid("K, tau, n and p must all be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {}", delta)));
    }
    let bound = 4.0 * k / (std::f64::consts::E * tau).sqrt();
    Ok(bound * (2.0 * (2.0 * p as f64 / delta).ln() / n as f64).sqrt())
}
