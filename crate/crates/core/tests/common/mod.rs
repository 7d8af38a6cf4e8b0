//! Independent reference implementations used as test oracles. Nothing here
//! calls into the solver; only the data containers are shared.
#![allow(dead_code)]

use explasso::{Dataset, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian design, `s` nonzero coefficients of size 1..2 with random signs, and
/// `y = X beta + sigma * noise` where the noise is Gaussian or, when `heavy`,
/// Student-t with 2 degrees of freedom.
pub fn random_instance(
    n: usize,
    p: usize,
    s: usize,
    sigma: f64,
    heavy: bool,
    seed: u64,
) -> (Dataset, Vec<f64>) {
    let mut r = rng(seed);
    let mut x = Matrix::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            x.set(i, j, r.sample::<f64, _>(StandardNormal));
        }
    }
    let mut beta = vec![0.0; p];
    for b in beta.iter_mut().take(s.min(p)) {
        let mag: f64 = 1.0 + r.random::<f64>();
        *b = if r.random::<bool>() { mag } else { -mag };
    }
    let fitted = x.mul_vec(&beta);
    let y = fitted
        .iter()
        .map(|f| {
            let e: f64 = if heavy {
                let z: f64 = r.sample(StandardNormal);
                let chi: f64 = (0..2).map(|_| r.sample::<f64, _>(StandardNormal).powi(2)).sum();
                z / (chi / 2.0).sqrt()
            } else {
                r.sample(StandardNormal)
            };
            f + sigma * e
        })
        .collect();
    (Dataset::new(x, y).unwrap(), beta)
}

pub fn residuals(d: &Dataset, beta: &[f64], b0: f64) -> Vec<f64> {
    (0..d.n())
        .map(|i| {
            let fit: f64 = (0..d.p()).map(|j| d.x().get(i, j) * beta[j]).sum();
            d.y()[i] - b0 - fit
        })
        .collect()
}

pub fn exp_loss(tau: f64, r: f64) -> f64 {
    (1.0 - (-tau * r * r / 2.0).exp()) / tau
}

/// `(1/n) sum loss(r_i) + lambda ||beta||_1` evaluated term by term.
pub fn exp_objective(d: &Dataset, tau: f64, lambda: f64, beta: &[f64], b0: f64) -> f64 {
    let r = residuals(d, beta, b0);
    r.iter().map(|&r| exp_loss(tau, r)).sum::<f64>() / d.n() as f64
        + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Gradient of the weighted least-squares term `(1/2n) sum v_i r_i^2` with
/// respect to `(b0, beta)`.
fn wls_gradient(d: &Dataset, v: &[f64], beta: &[f64], b0: f64) -> (f64, Vec<f64>) {
    let n = d.n() as f64;
    let r = residuals(d, beta, b0);
    let vr: Vec<f64> = r.iter().zip(v).map(|(r, v)| r * v).collect();
    let gb = -vr.iter().sum::<f64>() / n;
    let g = (0..d.p())
        .map(|j| -(0..d.n()).map(|i| d.x().get(i, j) * vr[i]).sum::<f64>() / n)
        .collect();
    (gb, g)
}

/// Largest subgradient-optimality violation of the weighted Lasso with an
/// optional unpenalized intercept.
pub fn wlasso_kkt(d: &Dataset, v: &[f64], lambda: f64, beta: &[f64], b0: Option<f64>) -> f64 {
    let (gb, g) = wls_gradient(d, v, beta, b0.unwrap_or(0.0));
    let mut worst: f64 = if b0.is_some() { gb.abs() } else { 0.0 };
    for (b, g) in beta.iter().zip(&g) {
        let gap = if *b != 0.0 {
            (g + lambda * b.signum()).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(gap);
    }
    worst
}

/// Largest stationarity violation of the exponential-loss objective, built from
/// the closed-form derivative `psi(r) = r exp(-tau r^2 / 2)`.
pub fn exp_kkt(d: &Dataset, tau: f64, lambda: f64, beta: &[f64], b0: Option<f64>) -> f64 {
    let v: Vec<f64> = residuals(d, beta, b0.unwrap_or(0.0))
        .iter()
        .map(|r| (-tau * r * r / 2.0).exp())
        .collect();
    // d/dbeta of the loss equals the weighted least-squares gradient at these weights
    wlasso_kkt(d, &v, lambda, beta, b0)
}

/// Accelerated proximal gradient (FISTA with adaptive restart) for
/// `(1/2n) sum v_i (y_i - b0 - x_i beta)^2 + lambda ||beta||_1`; runs until the
/// KKT violation drops below `tol`.
pub fn fista_wlasso(
    d: &Dataset,
    v: &[f64],
    lambda: f64,
    intercept: bool,
    tol: f64,
) -> (Vec<f64>, f64) {
    let (n, p) = (d.n(), d.p());
    let nf = n as f64;
    // Lipschitz constant: top eigenvalue of [1 X]^T V [1 X] / n by power iteration
    let mut u = vec![1.0; p + 1];
    let mut lip = 0.0;
    for _ in 0..500 {
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut s = if intercept { u[0] } else { 0.0 };
            for j in 0..p {
                s += d.x().get(i, j) * u[j + 1];
            }
            z[i] = v[i] * s / nf;
        }
        let mut w = vec![0.0; p + 1];
        if intercept {
            w[0] = z.iter().sum();
        }
        for j in 0..p {
            w[j + 1] = (0..n).map(|i| d.x().get(i, j) * z[i]).sum();
        }
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lip = norm;
        u = w.iter().map(|a| a / norm).collect();
    }
    let step = 1.0 / (lip * 1.01 + 1e-12);
    let soft = |z: f64, g: f64| z.signum() * (z.abs() - g).max(0.0);

    let mut beta = vec![0.0; p];
    let mut b0 = 0.0;
    let (mut yb, mut yb0) = (beta.clone(), b0);
    let mut t: f64 = 1.0;
    let obj = |beta: &[f64], b0: f64| {
        let r = residuals(d, beta, b0);
        r.iter().zip(v).map(|(r, v)| v * r * r).sum::<f64>() / (2.0 * nf)
            + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    };
    let mut last = obj(&beta, b0);
    for it in 0..2_000_000 {
        if it % 20 == 0 && wlasso_kkt(d, v, lambda, &beta, intercept.then_some(b0)) < tol {
            break;
        }
        let (gb, g) = wls_gradient(d, v, &yb, yb0);
        let new_beta: Vec<f64> = (0..p).map(|j| soft(yb[j] - step * g[j], step * lambda)).collect();
        let new_b0 = if intercept { yb0 - step * gb } else { 0.0 };
        let current = obj(&new_beta, new_b0);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        if current > last && t > 1.0 {
            // restart momentum
            yb = beta.clone();
            yb0 = b0;
            t = 1.0;
            continue;
        }
        let mom = (t - 1.0) / t_next;
        yb = (0..p).map(|j| new_beta[j] + mom * (new_beta[j] - beta[j])).collect();
        yb0 = new_b0 + mom * (new_b0 - b0);
        beta = new_beta;
        b0 = new_b0;
        t = t_next;
        last = current;
    }
    (beta, b0)
}

/// Central finite-difference gradient of `f` at `x` with step `h`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut work = x.to_vec();
    (0..x.len())
        .map(|j| {
            work[j] = x[j] + h;
            let up = f(&work);
            work[j] = x[j] - h;
            let down = f(&work);
            work[j] = x[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
