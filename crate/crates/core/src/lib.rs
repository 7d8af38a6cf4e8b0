//! Robust sparse linear regression with the exponential loss
//! `(1/tau) (1 - exp(-tau r^2 / 2))` and an L1 penalty.
//!
//! The estimator is computed by majorization-minimization: each outer step
//! re-weights the observations by `exp(-tau r_i^2 / 2)` and solves a weighted
//! Lasso by coordinate descent ([`wlasso`]). [`tune`] builds penalty grids and
//! runs K-fold cross-validation, [`theory`] evaluates the error-bound constants
//! of the estimator, and [`sim`] is the simulation harness behind the `explasso`
//! command-line tool.

pub mod config;
pub mod csvio;
pub mod dataset;
pub mod error;
pub mod loss;
pub mod mm;
pub mod sim;
pub mod theory;
pub mod tune;
pub mod wlasso;

pub use config::{FitConfig, FitResult, FitStatus, Init, MmRecord};
pub use dataset::{standardize, Dataset, Matrix, Standardization};
pub use error::{ErrorKind, Result, SolverError};
pub use loss::LossKind;
pub use mm::{fit, fit_baseline, fit_exponential_lasso, kkt_certificate, objective};
