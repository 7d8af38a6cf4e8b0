//! Solver configuration and fit results.

use crate::error::{invalid, Result};

pub const DEFAULT_TAU: f64 = 0.1;
pub const DEFAULT_HUBER_K: f64 = 1.345;

/// Starting point of the MM iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Init {
    Zeros,
    /// Squared-loss Lasso at the same penalty.
    #[default]
    OrdinaryLasso,
    /// User-supplied coefficients. A missing intercept is replaced by the
    /// median residual.
    Supplied {
        beta: Vec<f64>,
        intercept: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub tau: f64,
    pub lambda: f64,
    /// Threshold on `||b_{t+1} - b_t|| / (1 + ||b_t||)`.
    pub mm_tol: f64,
    pub mm_max_iter: usize,
    pub cd_tol: f64,
    pub cd_max_iter: usize,
    pub init: Init,
    /// Fit an unpenalized intercept.
    pub fit_intercept: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tau: DEFAULT_TAU,
            lambda: 0.0,
            mm_tol: 1e-6,
            mm_max_iter: 100,
            cd_tol: 1e-7,
            cd_max_iter: 10_000,
            init: Init::OrdinaryLasso,
            fit_intercept: true,
        }
    }
}

impl FitConfig {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_intercept(mut self, fit_intercept: bool) -> Self {
        self.fit_intercept = fit_intercept;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if !(self.mm_tol > 0.0) || !(self.cd_tol > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if self.mm_max_iter == 0 || self.cd_max_iter == 0 {
            return Err(invalid("iteration caps must be at least 1"));
        }
        if let Init::Supplied { beta, intercept } = &self.init {
            if beta.iter().chain(intercept.iter()).any(|v| !v.is_finite()) {
                return Err(invalid("supplied starting point is not finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    MaxIterReached,
}

/// One outer iteration of the MM loop.
#[derive(Debug, Clone, PartialEq)]
pub struct MmRecord {
    /// Objective after the update.
    pub objective: f64,
    pub relative_step: f64,
    pub min_weight: f64,
    pub max_weight: f64,
    pub inner_iterations: usize,
    /// `||beta||_1` after the update.
    pub l1_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub intercept: f64,
    /// Observation weights evaluated at the returned coefficients.
    pub weights: Vec<f64>,
    /// Objective at the starting point followed by one entry per MM step.
    pub objective_trace: Vec<f64>,
    pub trace: Vec<MmRecord>,
    pub status: FitStatus,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Columns frozen at zero by the inner solver in the last M-step.
    pub degenerate_columns: usize,
    pub lambda: f64,
}

impl FitResult {
    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }

    pub fn support(&self, threshold: f64) -> Vec<usize> {
        self.beta
            .iter()
            .enumerate()
            .filter(|(_, b)| b.abs() > threshold)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&f64::NAN)
    }
}
