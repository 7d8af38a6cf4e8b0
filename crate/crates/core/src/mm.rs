//! Majorization-minimization driver for penalized robust losses.
//!
//! For the exponential loss the concavity of `u -> 1 - exp(-tau u / 2)` gives,
//! at the current residuals `r_t`,
//!
//! ```text
//! L(beta) <= C_t + (1/2n) sum_i v_i (y_i - x_i . beta)^2,   v_i = exp(-tau r_{t,i}^2 / 2)
//! ```
//!
//! with equality at `beta_t`. Each outer step re-weights the observations and
//! solves the resulting weighted Lasso, warm-started at the current iterate, so
//! the objective never increases. The same loop with `v_i = min(1, k / |r_i|)`
//! fits the Huber baseline.

use crate::config::{FitConfig, FitResult, FitStatus, Init, MmRecord};
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::loss::{gradient_from_residuals, mean_loss, LossKind};
use crate::wlasso::{solve_weighted_lasso, subgradient_gap, WeightedProblem};

/// `F(beta) = L_tau(beta) + lambda ||beta||_1` for the exponential loss.
pub fn objective(d: &Dataset, tau: f64, lambda: f64, beta: &[f64], intercept: f64) -> Result<f64> {
    penalized_objective(&LossKind::exponential(tau), d, lambda, beta, intercept)
}

/// Mean loss plus `lambda ||beta||_1` for any [`LossKind`].
pub fn penalized_objective(
    kind: &LossKind,
    d: &Dataset,
    lambda: f64,
    beta: &[f64],
    intercept: f64,
) -> Result<f64> {
    let r = d.residuals(beta, intercept)?;
    Ok(mean_loss(kind, &r) + lambda * l1_norm(beta))
}

fn l1_norm(beta: &[f64]) -> f64 {
    beta.iter().map(|b| b.abs()).sum()
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|b| b * b).sum::<f64>().sqrt()
}

/// Largest violation of `0 in grad L(beta) + lambda d||beta||_1`, with
/// `grad L(beta) = -(1/n) X^T psi(r)`. Pass `Some(b0)` when an intercept was
/// fitted; its stationarity `(1/n) sum psi(r_i) = 0` is then included.
pub fn kkt_certificate(
    kind: &LossKind,
    d: &Dataset,
    lambda: f64,
    beta: &[f64],
    intercept: Option<f64>,
) -> Result<f64> {
    let r = d.residuals(beta, intercept.unwrap_or(0.0))?;
    Ok(certificate_from_residuals(kind, d, lambda, beta, &r, intercept.is_some()))
}

fn certificate_from_residuals(
    kind: &LossKind,
    d: &Dataset,
    lambda: f64,
    beta: &[f64],
    r: &[f64],
    with_intercept: bool,
) -> f64 {
    let grad = gradient_from_residuals(kind, d, r);
    let mut worst = beta
        .iter()
        .zip(&grad)
        .map(|(&b, &g)| subgradient_gap(-g, b, lambda))
        .fold(0.0, f64::max);
    if with_intercept {
        let mean_psi = r.iter().map(|&r| kind.influence(r)).sum::<f64>() / r.len() as f64;
        worst = worst.max(mean_psi.abs());
    }
    worst
}

/// Observation weights of the quadratic majorizer at residuals `r` together with
/// the constant that makes it touch the loss: `C = (1/n) sum [loss(r_i) - v_i r_i^2 / 2]`.
pub fn majorizer(kind: &LossKind, r: &[f64]) -> (Vec<f64>, f64) {
    let v: Vec<f64> = r.iter().map(|&r| kind.weight(r)).collect();
    let c = r
        .iter()
        .zip(&v)
        .map(|(&r, &v)| kind.value(r) - 0.5 * v * r * r)
        .sum::<f64>()
        / r.len() as f64;
    (v, c)
}

/// Exponential-loss Lasso with `tau = cfg.tau`.
pub fn fit_exponential_lasso(d: &Dataset, cfg: &FitConfig) -> Result<FitResult> {
    fit(d, &LossKind::exponential(cfg.tau), cfg)
}

/// Squared-loss or Huber-loss Lasso.
pub fn fit_baseline(d: &Dataset, kind: &LossKind, cfg: &FitConfig) -> Result<FitResult> {
    match kind {
        LossKind::Squared | LossKind::Huber { .. } => fit(d, kind, cfg),
        LossKind::Exponential { .. } => Err(invalid(
            "baseline fits take the squared or Huber loss; use fit_exponential_lasso",
        )),
    }
}

/// Fits the penalized model for any supported loss. `cfg.tau` is ignored; the
/// loss carries its own parameter.
pub fn fit(d: &Dataset, kind: &LossKind, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    kind.validate()?;
    let (beta0, b0) = initial_point(d, cfg)?;
    match kind {
        LossKind::Squared => fit_squared(d, cfg, beta0, b0),
        _ => run_mm(d, kind, cfg, beta0, b0),
    }
}

fn initial_point(d: &Dataset, cfg: &FitConfig) -> Result<(Vec<f64>, f64)> {
    match &cfg.init {
        Init::Zeros => {
            let b0 = if cfg.fit_intercept { median(d.y()) } else { 0.0 };
            Ok((vec![0.0; d.p()], b0))
        }
        Init::Supplied { beta, intercept } => {
            d.check_beta(beta)?;
            let b0 = match (cfg.fit_intercept, intercept) {
                (false, _) => 0.0,
                (true, Some(b)) => *b,
                (true, None) => median(&d.residuals(beta, 0.0)?),
            };
            Ok((beta.clone(), b0))
        }
        Init::OrdinaryLasso => {
            let ones = vec![1.0; d.n()];
            let prob = WeightedProblem::new(d, &ones, cfg.lambda, cfg.fit_intercept)?;
            let sol = solve_weighted_lasso(&prob, None, cfg.cd_tol, cfg.cd_max_iter)?;
            Ok((sol.beta, sol.intercept))
        }
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn fit_squared(d: &Dataset, cfg: &FitConfig, beta0: Vec<f64>, b0: f64) -> Result<FitResult> {
    let kind = LossKind::Squared;
    let start = penalized_objective(&kind, d, cfg.lambda, &beta0, b0)?;
    let ones = vec![1.0; d.n()];
    let prob = WeightedProblem::new(d, &ones, cfg.lambda, cfg.fit_intercept)?;
    let sol = solve_weighted_lasso(&prob, Some((&beta0, b0)), cfg.cd_tol, cfg.cd_max_iter)?;
    let r = d.residuals(&sol.beta, sol.intercept)?;
    let end = mean_loss(&kind, &r) + cfg.lambda * l1_norm(&sol.beta);
    let step = diff_norm(&sol.beta, &beta0) / (1.0 + l2_norm(&beta0));
    Ok(FitResult {
        kkt_residual: certificate_from_residuals(&kind, d, cfg.lambda, &sol.beta, &r, cfg.fit_intercept),
        trace: vec![MmRecord {
            objective: end,
            relative_step: step,
            min_weight: 1.0,
            max_weight: 1.0,
            inner_iterations: sol.iterations,
            l1_norm: l1_norm(&sol.beta),
        }],
        objective_trace: vec![start, end],
        status: if sol.converged {
            FitStatus::Converged
        } else {
            FitStatus::MaxIterReached
        },
        iterations: 1,
        degenerate_columns: sol.degenerate_columns,
        weights: ones,
        beta: sol.beta,
        intercept: sol.intercept,
        lambda: cfg.lambda,
    })
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn run_mm(
    d: &Dataset,
    kind: &LossKind,
    cfg: &FitConfig,
    mut beta: Vec<f64>,
    mut b0: f64,
) -> Result<FitResult> {
    let lambda = cfg.lambda;
    let kkt_target = 10.0 * cfg.cd_tol;
    let mut r = d.residuals(&beta, b0)?;
    let mut objective_trace = vec![mean_loss(kind, &r) + lambda * l1_norm(&beta)];
    let mut trace = Vec::new();
    let mut status = FitStatus::MaxIterReached;
    let mut degenerate_columns = 0;
    let mut kkt = f64::INFINITY;

    for _ in 0..cfg.mm_max_iter {
        let weights: Vec<f64> = r.iter().map(|&r| kind.weight(r)).collect();
        let prob = WeightedProblem::new(d, &weights, lambda, cfg.fit_intercept)?;
        let sol = solve_weighted_lasso(&prob, Some((&beta, b0)), cfg.cd_tol, cfg.cd_max_iter)?;
        let step = diff_norm(&sol.beta, &beta) / (1.0 + l2_norm(&beta));
        beta = sol.beta;
        b0 = sol.intercept;
        degenerate_columns = sol.degenerate_columns;
        r = d.residuals(&beta, b0)?;
        let obj = mean_loss(kind, &r) + lambda * l1_norm(&beta);
        objective_trace.push(obj);
        trace.push(MmRecord {
            objective: obj,
            relative_step: step,
            min_weight: weights.iter().copied().fold(f64::INFINITY, f64::min),
            max_weight: weights.iter().copied().fold(0.0, f64::max),
            inner_iterations: sol.iterations,
            l1_norm: l1_norm(&beta),
        });
        if step < cfg.mm_tol {
            kkt = certificate_from_residuals(kind, d, lambda, &beta, &r, cfg.fit_intercept);
            if kkt <= kkt_target {
                status = FitStatus::Converged;
                break;
            }
        } else {
            kkt = f64::INFINITY;
        }
    }
    if !kkt.is_finite() {
        kkt = certificate_from_residuals(kind, d, lambda, &beta, &r, cfg.fit_intercept);
    }
    Ok(FitResult {
        weights: r.iter().map(|&r| kind.weight(r)).collect(),
        iterations: trace.len(),
        beta,
        intercept: b0,
        objective_trace,
        trace,
        status,
        kkt_residual: kkt,
        degenerate_columns,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn instance(n: usize, p: usize, seed: u64, outliers: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Matrix::zeros(n, p);
        for j in 0..p {
            for i in 0..n {
                x.set(i, j, rng.sample(StandardNormal));
            }
        }
        let beta: Vec<f64> = (0..p).map(|j| if j < 3 { 1.5 } else { 0.0 }).collect();
        let mut y = x.mul_vec(&beta);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += rng.sample::<f64, _>(StandardNormal) + if i < outliers { 15.0 } else { 0.0 };
        }
        Dataset::new(x, y).unwrap()
    }

    fn cfg(lambda: f64, tau: f64) -> FitConfig {
        FitConfig::default().with_lambda(lambda).with_tau(tau)
    }

    #[test]
    fn objective_examples() {
        let d = Dataset::new(Matrix::zeros(4, 2), vec![0.0; 4]).unwrap();
        assert_eq!(objective(&d, 0.1, 1.0, &[0.0, 0.0], 0.0).unwrap(), 0.0);
        let d = instance(30, 5, 1, 0);
        let beta = [0.3, -0.2, 0.0, 1.0, 0.5];
        let loss = crate::loss::empirical_loss(&LossKind::exponential(0.5), &d, &beta, 0.1).unwrap();
        assert_eq!(objective(&d, 0.5, 0.0, &beta, 0.1).unwrap(), loss);
        let err = objective(&d, 0.5, 0.0, &[0.0], 0.0).unwrap_err();
        assert_eq!(err.kind(), crate::error::ErrorKind::DimensionMismatch);
    }

    #[test]
    fn objective_below_saturation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = instance(40, 8, 2, 5);
        for _ in 0..50 {
            let tau = 10f64.powf(rng.random_range(-2.0..1.0));
            let lambda = rng.random_range(0.0..1.0);
            let beta: Vec<f64> = (0..8).map(|_| rng.random_range(-5.0..5.0)).collect();
            let f = objective(&d, tau, lambda, &beta, 0.0).unwrap();
            assert!(f >= 0.0 && f < 1.0 / tau + lambda * l1_norm(&beta));
        }
    }

    #[test]
    fn majorizer_touches_the_loss() {
        let d = instance(50, 6, 4, 5);
        let kind = LossKind::exponential(0.3);
        let fit = fit(&d, &kind, &cfg(0.05, 0.3)).unwrap();
        let r = d.residuals(&fit.beta, fit.intercept).unwrap();
        let (v, c) = majorizer(&kind, &r);
        let surrogate = c + r.iter().zip(&v).map(|(r, v)| v * r * r).sum::<f64>() / (2.0 * r.len() as f64);
        assert!((surrogate - mean_loss(&kind, &r)).abs() < 1e-10);
        // the surrogate built at one point dominates the loss at another
        let shifted: Vec<f64> = r.iter().map(|r| r + 0.7).collect();
        let upper = c + shifted.iter().zip(&v).map(|(r, v)| v * r * r).sum::<f64>() / (2.0 * r.len() as f64);
        assert!(upper >= mean_loss(&kind, &shifted) - 1e-12);
    }

    #[test]
    fn descent_boundedness_and_stationarity() {
        for seed in 0..10 {
            let d = instance(60, 30, seed, 6);
            for &tau in &[0.01, 0.1, 1.0] {
                let c = cfg(0.08, tau).with_init(Init::Zeros);
                let fit = fit_exponential_lasso(&d, &c).unwrap();
                let start = fit.objective_trace[0];
                for w in fit.objective_trace.windows(2) {
                    assert!(w[1] <= w[0] + 1e-10, "ascent {} -> {}", w[0], w[1]);
                }
                for rec in &fit.trace {
                    assert!(rec.l1_norm <= start / c.lambda + 1e-12);
                    assert!(rec.min_weight >= 0.0 && rec.max_weight <= 1.0);
                }
                assert!(fit.converged());
                assert!(fit.kkt_residual <= 10.0 * c.cd_tol);
                let check =
                    kkt_certificate(&LossKind::exponential(tau), &d, c.lambda, &fit.beta, Some(fit.intercept))
                        .unwrap();
                assert_eq!(check, fit.kkt_residual);
            }
        }
    }

    #[test]
    fn tiny_tau_matches_squared_lasso() {
        let d = instance(50, 20, 7, 0);
        let c = cfg(0.1, 1e-8);
        let exp = fit_exponential_lasso(&d, &c).unwrap();
        let sq = fit_baseline(&d, &LossKind::Squared, &c).unwrap();
        let gap = exp.beta.iter().zip(&sq.beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-5, "gap {}", gap);
    }

    #[test]
    fn huge_huber_threshold_matches_squared() {
        let d = instance(50, 20, 8, 3);
        let c = cfg(0.1, 0.1);
        let hub = fit_baseline(&d, &LossKind::huber(1e8), &c).unwrap();
        let sq = fit_baseline(&d, &LossKind::Squared, &c).unwrap();
        let gap = hub.beta.iter().zip(&sq.beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-6, "gap {}", gap);
        assert!(fit_baseline(&d, &LossKind::exponential(0.1), &c).is_err());
    }

    #[test]
    fn squared_orthonormal_design_closed_form() {
        // Columns of a 4x4 Hadamard matrix scaled so X^T X / n = I
        let h = [[1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 1.0, -1.0], [1.0, 1.0, -1.0, -1.0], [1.0, -1.0, -1.0, 1.0]];
        let x = Matrix::from_rows(&h).unwrap();
        let y = vec![3.0, -1.0, 0.5, 2.0];
        let d = Dataset::new(x, y.clone()).unwrap();
        let lambda = 0.4;
        let c = cfg(lambda, 0.1).with_intercept(false);
        let fit = fit_baseline(&d, &LossKind::Squared, &c).unwrap();
        for j in 0..4 {
            let z = (0..4).map(|i| h[i][j] * y[i]).sum::<f64>() / 4.0;
            let expect = z.signum() * (z.abs() - lambda).max(0.0);
            assert!((fit.beta[j] - expect).abs() < 1e-9, "{} vs {}", fit.beta[j], expect);
        }
    }

    #[test]
    fn squared_above_lambda_max_is_zero() {
        let d = instance(40, 10, 9, 0);
        let lmax = crate::wlasso::lambda_max(&d, &vec![1.0; 40], true).unwrap();
        let fit = fit_baseline(&d, &LossKind::Squared, &cfg(lmax * 1.0001, 0.1)).unwrap();
        assert!(fit.beta.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn noiseless_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = Matrix::zeros(100, 20);
        for j in 0..20 {
            for i in 0..100 {
                x.set(i, j, rng.sample(StandardNormal));
            }
        }
        let truth: Vec<f64> = (0..20).map(|j| [2.0, -1.5, 1.0].get(j).copied().unwrap_or(0.0)).collect();
        let d = Dataset::new(x.clone(), x.mul_vec(&truth)).unwrap();
        let fit = fit_exponential_lasso(&d, &cfg(1e-3, 0.1)).unwrap();
        assert!(diff_norm(&fit.beta, &truth) <= 0.05);
    }

    #[test]
    fn certificate_zero_at_origin_above_gradient_norm() {
        let d = instance(40, 10, 12, 2);
        let kind = LossKind::exponential(0.1);
        let g = crate::loss::empirical_gradient(&kind, &d, &vec![0.0; 10], 0.0).unwrap();
        let gmax = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert_eq!(kkt_certificate(&kind, &d, gmax, &vec![0.0; 10], None).unwrap(), 0.0);
    }

    #[test]
    fn perturbing_a_converged_fit_raises_the_certificate() {
        for seed in 0..5 {
            let d = instance(80, 15, 20 + seed, 4);
            let kind = LossKind::exponential(0.1);
            let c = cfg(0.05, 0.1);
            let fit = fit(&d, &kind, &c).unwrap();
            let j = fit.beta.iter().position(|b| *b != 0.0).unwrap();
            let mut beta = fit.beta.clone();
            beta[j] += 0.01;
            let moved = kkt_certificate(&kind, &d, c.lambda, &beta, Some(fit.intercept)).unwrap();
            assert!(moved > fit.kkt_residual);
        }
    }

    #[test]
    fn supplied_start_at_the_solution_stops_quickly() {
        let d = instance(60, 12, 30, 3);
        let c = cfg(0.05, 0.1);
        let first = fit_exponential_lasso(&d, &c).unwrap();
        let again = fit_exponential_lasso(
            &d,
            &c.clone().with_init(Init::Supplied { beta: first.beta.clone(), intercept: Some(first.intercept) }),
        )
        .unwrap();
        assert!(again.iterations <= 2);
        assert!(diff_norm(&again.beta, &first.beta) < 1e-5);
    }
}
