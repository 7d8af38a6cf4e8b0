//! Computable constants of the non-asymptotic error bound: influence bound,
//! local curvature, restricted-eigenvalue estimate and the resulting radii.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Cauchy, ContinuousCDF, Normal, StudentsT};

use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::loss::influence_bound;
use crate::sim::{gen_noise, NoiseSpec};
use crate::tune::theoretical_lambda;

/// `gamma = exp(-tau c^2 / 2) (1 - tau c^2)`, the smallest second derivative of
/// the loss on `[-c, c]`. Requires `0 < c < 1/sqrt(tau)`.
pub fn curvature_lower(tau: f64, c: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid(format!("tau must be positive, got {}", tau)));
    }
    let limit = 1.0 / tau.sqrt();
    if !(c > 0.0 && c < limit) {
        return Err(invalid(format!(
            "c must lie in (0, 1/sqrt(tau)) = (0, {}) for positive curvature, got {}",
            limit, c
        )));
    }
    let t = tau * c * c;
    Ok((-0.5 * t).exp() * (1.0 - t))
}

/// `kappa = (p0 / 2) gamma phi_min`.
pub fn kappa(p0: f64, gamma_lower: f64, phi_min: f64) -> Result<f64> {
    if !(p0 > 0.0 && p0 <= 1.0) {
        return Err(invalid(format!("p0 must lie in (0, 1], got {}", p0)));
    }
    if !(gamma_lower > 0.0 && phi_min > 0.0 && gamma_lower.is_finite() && phi_min.is_finite()) {
        return Err(invalid("gamma_lower and phi_min must be positive"));
    }
    Ok(0.5 * p0 * gamma_lower * phi_min)
}

/// `(12 lambda sqrt(s) / kappa, 48 lambda s / kappa)`.
pub fn error_bounds(lambda: f64, s: usize, kappa: f64) -> Result<(f64, f64)> {
    if !(lambda > 0.0 && kappa > 0.0 && s > 0 && lambda.is_finite() && kappa.is_finite()) {
        return Err(invalid("lambda, s and kappa must be positive"));
    }
    let s = s as f64;
    Ok((12.0 * lambda * s.sqrt() / kappa, 48.0 * lambda * s / kappa))
}

/// `1 - delta - 2 exp(-n p0^2 / 8)`.
pub fn bound_probability(n: usize, p0: f64, delta: f64) -> f64 {
    1.0 - delta - 2.0 * (-(n as f64) * p0 * p0 / 8.0).exp()
}

/// Monte-Carlo estimate of the restricted eigenvalue over the cone
/// `||D_{S^c}||_1 <= 3 ||D_S||_1`: the smallest Rayleigh quotient
/// `(1/n) ||X D||^2 / ||D||^2` among `trials` sampled cone directions.
///
/// Each direction draws `D_S` spherically, draws `D_{S^c}` spherically and
/// rescales it to `||D_{S^c}||_1 = 3u ||D_S||_1` with `u ~ U[0, 1]`. Being a
/// minimum over a finite sample, the result bounds the true constant from above.
pub fn restricted_eigen_estimate(
    d: &Dataset,
    support: &[usize],
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let p = d.p();
    if support.is_empty() {
        return Err(invalid("support must be nonempty"));
    }
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let mut in_support = vec![false; p];
    for &j in support {
        if j >= p {
            return Err(invalid(format!("support index {} out of range for p = {}", j, p)));
        }
        in_support[j] = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = d.n() as f64;
    let mut best = f64::INFINITY;
    let mut delta = vec![0.0; p];
    for _ in 0..trials {
        let mut l1_s = 0.0;
        let mut l1_c = 0.0;
        for (j, v) in delta.iter_mut().enumerate() {
            *v = rng.sample::<f64, _>(StandardNormal);
            if in_support[j] {
                l1_s += v.abs();
            } else {
                l1_c += v.abs();
            }
        }
        let u: f64 = rng.random();
        let scale = if l1_c > 0.0 { 3.0 * u * l1_s / l1_c } else { 0.0 };
        for (j, v) in delta.iter_mut().enumerate() {
            if !in_support[j] {
                *v *= scale;
            }
        }
        let norm_sq: f64 = delta.iter().map(|v| v * v).sum();
        let fitted = d.x().mul_vec(&delta);
        let quotient = fitted.iter().map(|v| v * v).sum::<f64>() / n / norm_sq;
        best = best.min(quotient);
    }
    Ok(best)
}

/// `P(|e| <= c)` for a noise family. Closed forms for Gaussian, Student and
/// Cauchy noise; contaminated noise uses `mc_draws` seeded Monte-Carlo draws.
pub fn noise_mass_near_zero(noise: &NoiseSpec, c: f64, mc_draws: usize, seed: u64) -> Result<f64> {
    noise.validate()?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("c must be positive, got {}", c)));
    }
    let two_sided = |cdf: f64| 2.0 * cdf - 1.0;
    Ok(match noise {
        NoiseSpec::Gauss { sd } => two_sided(Normal::new(0.0, *sd).map_err(stats_err)?.cdf(c)),
        NoiseSpec::Student { df } => {
            two_sided(StudentsT::new(0.0, 1.0, *df).map_err(stats_err)?.cdf(c))
        }
        NoiseSpec::Cauchy => two_sided(Cauchy::new(0.0, 1.0).map_err(stats_err)?.cdf(c)),
        NoiseSpec::Contaminated { .. } => {
            if mc_draws == 0 {
                return Err(invalid("contaminated noise needs mc_draws >= 1"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = gen_noise(noise, mc_draws, &mut rng)?;
            e.iter().filter(|v| v.abs() <= c).count() as f64 / mc_draws as f64
        }
    })
}

fn stats_err<E: fmt::Display>(e: E) -> crate::error::SolverError {
    invalid(e.to_string())
}

/// Inputs of a [`TheoryReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    /// Sup-norm bound on the rows of the design.
    pub k: f64,
    pub tau: f64,
    pub c: f64,
    pub p0: f64,
    pub phi_min: f64,
    pub s: usize,
    pub n: usize,
    pub p: usize,
    pub delta: f64,
}

impl Default for TheoryInputs {
    fn default() -> Self {
        TheoryInputs {
            k: 1.0,
            tau: crate::config::DEFAULT_TAU,
            c: 1.0,
            p0: 0.9,
            phi_min: 0.5,
            s: 10,
            n: 100,
            p: 120,
            delta: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(non_snake_case)]
pub struct TheoryReport {
    pub inputs: TheoryInputs,
    /// `1 / sqrt(e tau)`, the bound on the influence function.
    pub B_tau: f64,
    pub gamma_lower: f64,
    pub kappa: f64,
    pub lambda_theory: f64,
    pub l2_bound: f64,
    pub l1_bound: f64,
    /// `1 - delta - 2 exp(-n p0^2 / 8)`; may be negative for small `n`.
    pub probability: f64,
}

impl TheoryReport {
    pub fn compute(inputs: TheoryInputs) -> Result<Self> {
        let gamma_lower = curvature_lower(inputs.tau, inputs.c)?;
        let kappa = kappa(inputs.p0, gamma_lower, inputs.phi_min)?;
        let lambda_theory = theoretical_lambda(inputs.k, inputs.tau, inputs.n, inputs.p, inputs.delta)?;
        if inputs.s == 0 {
            return Err(invalid("s must be at least 1"));
        }
        let (l2_bound, l1_bound) = error_bounds(lambda_theory, inputs.s, kappa)?;
        Ok(TheoryReport {
            inputs,
            B_tau: influence_bound(inputs.tau),
            gamma_lower,
            kappa,
            lambda_theory,
            l2_bound,
            l1_bound,
            probability: bound_probability(inputs.n, inputs.p0, inputs.delta),
        })
    }

    /// `(name, value)` pairs in output order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let i = &self.inputs;
        vec![
            ("K", i.k),
            ("tau", i.tau),
            ("c", i.c),
            ("p0", i.p0),
            ("phi_min", i.phi_min),
            ("s", i.s as f64),
            ("n", i.n as f64),
            ("p", i.p as f64),
            ("delta", i.delta),
            ("B_tau", self.B_tau),
            ("gamma_lower", self.gamma_lower),
            ("kappa", self.kappa),
            ("lambda_theory", self.lambda_theory),
            ("l2_bound", self.l2_bound),
            ("l1_bound", self.l1_bound),
            ("probability", self.probability),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,value\n");
        for (name, value) in self.entries() {
            out.push_str(&format!("{},{}\n", name, value));
        }
        out
    }
}

impl fmt::Display for TheoryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in self.entries() {
            writeln!(f, "{:>14}  {:.6}", name, value)?;
        }
        Ok(())
    }
}
