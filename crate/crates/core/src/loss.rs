//! Per-residual losses, their derivatives and the observation weights used by
//! the MM iterations.
//!
//! The exponential loss is `(1/tau) * (1 - exp(-tau r^2 / 2))`. For very large
//! residuals `exp` underflows to zero and the loss saturates at `1/tau`; the
//! weight and the influence go to zero. No clamping is applied.

use crate::dataset::Dataset;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Exponential { tau: f64 },
    Squared,
    Huber { k: f64 },
}

impl LossKind {
    pub fn exponential(tau: f64) -> Self {
        LossKind::Exponential { tau }
    }

    pub fn huber(k: f64) -> Self {
        LossKind::Huber { k }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LossKind::Exponential { tau } if !(tau > 0.0 && tau.is_finite()) => {
                Err(invalid(format!("tau must be positive, got {}", tau)))
            }
            LossKind::Huber { k } if !(k > 0.0 && k.is_finite()) => {
                Err(invalid(format!("Huber threshold must be positive, got {}", k)))
            }
            _ => Ok(()),
        }
    }

    /// `loss(r)`.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            LossKind::Exponential { tau } => -(-0.5 * tau * r * r).exp_m1() / tau,
            LossKind::Squared => 0.5 * r * r,
            LossKind::Huber { k } => {
                let a = r.abs();
                if a <= k {
                    0.5 * r * r
                } else {
                    k * a - 0.5 * k * k
                }
            }
        }
    }

    /// Derivative of the loss in the residual.
    #[inline]
    pub fn influence(&self, r: f64) -> f64 {
        match *self {
            LossKind::Exponential { tau } => r * mm_weight(tau, r),
            LossKind::Squared => r,
            LossKind::Huber { k } => r.clamp(-k, k),
        }
    }

    /// Weight of the quadratic majorizer at residual `r`, i.e. `influence(r) / r`.
    #[inline]
    pub fn weight(&self, r: f64) -> f64 {
        match *self {
            LossKind::Exponential { tau } => mm_weight(tau, r),
            LossKind::Squared => 1.0,
            LossKind::Huber { k } => huber_weight(k, r),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            LossKind::Exponential { tau } => format!("exponential(tau={})", tau),
            LossKind::Squared => "squared".to_string(),
            LossKind::Huber { k } => format!("huber(k={})", k),
        }
    }
}

/// `exp(-tau r^2 / 2)`.
#[inline]
pub fn mm_weight(tau: f64, r: f64) -> f64 {
    (-0.5 * tau * r * r).exp()
}

/// `min(1, k / |r|)`.
#[inline]
pub fn huber_weight(k: f64, r: f64) -> f64 {
    let a = r.abs();
    if a <= k {
        1.0
    } else {
        k / a
    }
}

/// Bound on the exponential influence function, `1 / sqrt(e tau)`.
pub fn influence_bound(tau: f64) -> f64 {
    1.0 / (std::f64::consts::E * tau).sqrt()
}

/// `(1/n) sum loss(y_i - intercept - x_i . beta)`.
pub fn empirical_loss(kind: &LossKind, d: &Dataset, beta: &[f64], intercept: f64) -> Result<f64> {
    let r = d.residuals(beta, intercept)?;
    Ok(mean_loss(kind, &r))
}

pub(crate) fn mean_loss(kind: &LossKind, residuals: &[f64]) -> f64 {
    residuals.iter().map(|&r| kind.value(r)).sum::<f64>() / residuals.len() as f64
}

/// Gradient of [`empirical_loss`] in `beta`: `-(1/n) X^T psi(r)`.
pub fn empirical_gradient(
    kind: &LossKind,
    d: &Dataset,
    beta: &[f64],
    intercept: f64,
) -> Result<Vec<f64>> {
    let r = d.residuals(beta, intercept)?;
    Ok(gradient_from_residuals(kind, d, &r))
}

/// Derivative of [`empirical_loss`] in the intercept: `-(1/n) sum psi(r_i)`.
pub fn intercept_derivative(
    kind: &LossKind,
    d: &Dataset,
    beta: &[f64],
    intercept: f64,
) -> Result<f64> {
    let r = d.residuals(beta, intercept)?;
    Ok(-r.iter().map(|&r| kind.influence(r)).sum::<f64>() / d.n() as f64)
}

pub(crate) fn gradient_from_residuals(kind: &LossKind, d: &Dataset, r: &[f64]) -> Vec<f64> {
    let psi: Vec<f64> = r.iter().map(|&r| kind.influence(r)).collect();
    let n = d.n() as f64;
    d.x().tr_mul_vec(&psi).into_iter().map(|g| -g / n).collect()
}
