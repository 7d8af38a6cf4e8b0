//! Simulation harness: data-generating processes, noise families, outlier
//! contamination, evaluation metrics and the replication engine.
//!
//! Every replication draws from its own `ChaCha8Rng` seeded with
//! `scenario.seed + replication`, and aggregation runs in replication order,
//! so results do not depend on scheduling.

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{FitConfig, DEFAULT_HUBER_K, DEFAULT_TAU};
use crate::dataset::{Dataset, Matrix};
use crate::error::{invalid, mismatch, Result, SolverError};
use crate::loss::LossKind;
use crate::tune::{cv_fit, default_ratio, make_grid, CvScore, LambdaRule};

pub mod presets;

/// Coefficients with absolute value above this count as selected.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

/// Sign applied to each outlier shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutlierSign {
    /// `+` or `-` with equal probability.
    #[default]
    Symmetric,
    Positive,
}

/// Shift added to contaminated responses: a draw from `N(mean, sd^2)` with a
/// sign chosen by `sign`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutlierSpec {
    #[serde(default = "OutlierSpec::default_mean")]
    pub mean: f64,
    #[serde(default = "OutlierSpec::default_sd")]
    pub sd: f64,
    #[serde(default)]
    pub sign: OutlierSign,
}

impl OutlierSpec {
    fn default_mean() -> f64 {
        10.0
    }

    fn default_sd() -> f64 {
        1.0
    }
}

impl Default for OutlierSpec {
    fn default() -> Self {
        OutlierSpec {
            mean: Self::default_mean(),
            sd: Self::default_sd(),
            sign: OutlierSign::Symmetric,
        }
    }
}

/// Noise family of the linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Gauss {
        sd: f64,
    },
    Student {
        df: f64,
    },
    Cauchy,
    /// `base` noise on every response, plus an outlier shift on a uniformly
    /// chosen subset of `floor(rate * n)` responses.
    Contaminated {
        base: Box<NoiseSpec>,
        rate: f64,
        #[serde(default)]
        outlier: OutlierSpec,
    },
}

impl NoiseSpec {
    pub const FAMILIES: [&'static str; 4] = ["gauss", "student", "cauchy", "contaminated"];

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::Gauss { sd } if !(*sd > 0.0 && sd.is_finite()) => {
                Err(invalid(format!("gauss noise needs sd > 0, got {}", sd)))
            }
            NoiseSpec::Student { df } if !(*df > 0.0 && df.is_finite()) => {
                Err(invalid(format!("student noise needs df > 0, got {}", df)))
            }
            NoiseSpec::Contaminated {
                base,
                rate,
                outlier,
            } => {
                if matches!(**base, NoiseSpec::Contaminated { .. }) {
                    return Err(invalid("contaminated noise cannot be nested"));
                }
                if !(*rate >= 0.0 && *rate < 1.0) {
                    return Err(invalid(format!(
                        "contamination rate must lie in [0, 1), got {}",
                        rate
                    )));
                }
                if !(outlier.sd >= 0.0 && outlier.sd.is_finite() && outlier.mean.is_finite()) {
                    return Err(invalid("outlier mean must be finite and sd nonnegative"));
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }

    /// Noise without contamination.
    pub fn base(&self) -> &NoiseSpec {
        match self {
            NoiseSpec::Contaminated { base, .. } => base,
            other => other,
        }
    }

    pub fn label(&self) -> String {
        match self {
            NoiseSpec::Gauss { sd } => format!("N(0,{}^2)", sd),
            NoiseSpec::Student { df } => format!("t_{}", df),
            NoiseSpec::Cauchy => "Cauchy".to_string(),
            NoiseSpec::Contaminated { base, rate, .. } => {
                format!("{} + {}% outliers", base.label(), (rate * 100.0).round())
            }
        }
    }
}

/// Loss of one estimator in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loss", rename_all = "snake_case")]
pub enum LossSpec {
    Exponential {
        #[serde(default = "default_tau")]
        tau: f64,
    },
    Squared,
    Huber {
        #[serde(default = "default_k")]
        k: f64,
    },
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

fn default_k() -> f64 {
    DEFAULT_HUBER_K
}

impl LossSpec {
    pub fn loss(&self) -> LossKind {
        match *self {
            LossSpec::Exponential { tau } => LossKind::exponential(tau),
            LossSpec::Squared => LossKind::Squared,
            LossSpec::Huber { k } => LossKind::huber(k),
        }
    }
}

/// One estimator of a scenario: a loss and the rule that picks its penalty
/// from the cross-validation curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    #[serde(flatten)]
    pub loss: LossSpec,
    #[serde(default)]
    pub lambda_rule: LambdaRule,
}

impl MethodSpec {
    pub fn exponential(tau: f64) -> Self {
        LossSpec::Exponential { tau }.into()
    }

    pub fn squared() -> Self {
        LossSpec::Squared.into()
    }

    pub fn huber(k: f64) -> Self {
        LossSpec::Huber { k }.into()
    }

    pub fn with_rule(mut self, rule: LambdaRule) -> Self {
        self.lambda_rule = rule;
        self
    }

    pub fn loss(&self) -> LossKind {
        self.loss.loss()
    }

    /// Loss label, suffixed with `[1se]` under the one-standard-error rule.
    pub fn label(&self) -> String {
        match self.lambda_rule {
            LambdaRule::Min => self.loss().label(),
            LambdaRule::OneSe => format!("{} [1se]", self.loss().label()),
        }
    }
}

impl From<LossSpec> for MethodSpec {
    fn from(loss: LossSpec) -> Self {
        MethodSpec {
            loss,
            lambda_rule: LambdaRule::Min,
        }
    }
}

/// Held-out score used by the harness's cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSpec {
    #[default]
    Mse,
    ExpLoss,
}

/// One simulation setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    pub n: usize,
    pub p: usize,
    pub s_star: usize,
    #[serde(default)]
    pub rho_x: f64,
    pub noise: NoiseSpec,
    #[serde(default = "ScenarioSpec::default_n_test")]
    pub n_test: usize,
    #[serde(default = "ScenarioSpec::default_seed")]
    pub seed: u64,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "ScenarioSpec::default_folds")]
    pub cv_folds: usize,
    #[serde(default = "ScenarioSpec::default_nlambda")]
    pub nlambda: usize,
    /// Defaults to `1e-3` when `n < p`, else `1e-4`.
    #[serde(default)]
    pub lambda_ratio: Option<f64>,
    #[serde(default)]
    pub score: ScoreSpec,
}

impl ScenarioSpec {
    fn default_n_test() -> usize {
        5000
    }

    fn default_seed() -> u64 {
        1
    }

    fn default_folds() -> usize {
        5
    }

    fn default_nlambda() -> usize {
        100
    }

    /// A scenario with harness defaults for everything but the essentials.
    pub fn new(id: &str, n: usize, p: usize, s_star: usize, noise: NoiseSpec) -> Self {
        ScenarioSpec {
            id: id.to_string(),
            n,
            p,
            s_star,
            rho_x: 0.0,
            noise,
            n_test: Self::default_n_test(),
            seed: Self::default_seed(),
            methods: vec![
                MethodSpec::exponential(DEFAULT_TAU),
                MethodSpec::squared(),
                MethodSpec::huber(DEFAULT_HUBER_K),
            ],
            cv_folds: Self::default_folds(),
            nlambda: Self::default_nlambda(),
            lambda_ratio: None,
            score: ScoreSpec::Mse,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ScenarioSpec =
            toml::from_str(text).map_err(|e| SolverError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 || self.n_test < 1 {
            return Err(invalid("scenario needs n >= 2, p >= 1 and n_test >= 1"));
        }
        if self.s_star % 2 != 0 || self.s_star > self.p {
            return Err(invalid(format!(
                "s_star must be even and at most p = {}, got {}",
                self.p, self.s_star
            )));
        }
        if !(self.rho_x >= 0.0 && self.rho_x < 1.0) {
            return Err(invalid(format!("rho_x must lie in [0, 1), got {}", self.rho_x)));
        }
        if self.methods.is_empty() {
            return Err(invalid("scenario lists no methods"));
        }
        for m in &self.methods {
            m.loss().validate()?;
        }
        if self.cv_folds < 2 || self.cv_folds > self.n {
            return Err(invalid(format!(
                "cv_folds must lie in [2, n], got {}",
                self.cv_folds
            )));
        }
        if self.nlambda < 2 {
            return Err(invalid("nlambda must be at least 2"));
        }
        if let Some(r) = self.lambda_ratio {
            if !(r > 0.0 && r < 1.0) {
                return Err(invalid(format!("lambda_ratio must lie in (0, 1), got {}", r)));
            }
        }
        self.noise.validate()
    }
}

/// Rows i.i.d. `N(0, Sigma)` with `Sigma_ij = rho^|i-j|`, built column by column
/// through the AR(1) recursion.
pub fn gen_design<R: Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> Result<Matrix> {
    if !(rho >= 0.0 && rho < 1.0) {
        return Err(invalid(format!("rho_x must lie in [0, 1), got {}", rho)));
    }
    let innovation = (1.0 - rho * rho).sqrt();
    let mut x = Matrix::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            let v = if j == 0 {
                z
            } else {
                rho * x.get(i, j - 1) + innovation * z
            };
            x.set(i, j, v);
        }
    }
    Ok(x)
}

/// `s_star / 2` ones, then `s_star / 2` minus ones, then zeros.
pub fn gen_beta0(p: usize, s_star: usize) -> Result<Vec<f64>> {
    if s_star % 2 != 0 || s_star > p {
        return Err(invalid(format!(
            "s_star must be even and at most p = {}, got {}",
            p, s_star
        )));
    }
    let mut beta = vec![0.0; p];
    for (j, b) in beta.iter_mut().take(s_star).enumerate() {
        *b = if j < s_star / 2 { 1.0 } else { -1.0 };
    }
    Ok(beta)
}

fn draw_base<R: Rng + ?Sized>(noise: &NoiseSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    Ok(match noise {
        NoiseSpec::Gauss { sd } => {
            let d = Normal::new(0.0, *sd).map_err(|e| invalid(e.to_string()))?;
            d.sample_iter(rng).take(n).collect()
        }
        NoiseSpec::Student { df } => {
            let d = StudentT::new(*df).map_err(|e| invalid(e.to_string()))?;
            d.sample_iter(rng).take(n).collect()
        }
        NoiseSpec::Cauchy => {
            let d = Cauchy::new(0.0, 1.0).map_err(|e| invalid(e.to_string()))?;
            d.sample_iter(rng).take(n).collect()
        }
        NoiseSpec::Contaminated { .. } => {
            return Err(invalid("contaminated noise cannot be nested"));
        }
    })
}

/// Adds outlier shifts to a uniformly chosen subset of `floor(rate * n)`
/// entries. Returns the indices that were modified, in increasing order.
pub fn contaminate<R: Rng + ?Sized>(
    values: &mut [f64],
    rate: f64,
    outlier: &OutlierSpec,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if !(rate >= 0.0 && rate < 1.0) {
        return Err(invalid(format!("contamination rate must lie in [0, 1), got {}", rate)));
    }
    let n = values.len();
    let count = (rate * n as f64).floor() as usize;
    let mut chosen = index::sample(rng, n, count).into_vec();
    chosen.sort_unstable();
    let shift = Normal::new(outlier.mean, outlier.sd).map_err(|e| invalid(e.to_string()))?;
    for &i in &chosen {
        let mut s = shift.sample(rng);
        if outlier.sign == OutlierSign::Symmetric && rng.random::<bool>() {
            s = -s;
        }
        values[i] += s;
    }
    Ok(chosen)
}

/// `n` i.i.d. draws from `noise`, with contamination applied when requested.
pub fn gen_noise<R: Rng + ?Sized>(noise: &NoiseSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    noise.validate()?;
    match noise {
        NoiseSpec::Contaminated {
            base,
            rate,
            outlier,
        } => {
            let mut e = draw_base(base, n, rng)?;
            contaminate(&mut e, *rate, outlier, rng)?;
            Ok(e)
        }
        other => draw_base(other, n, rng),
    }
}

/// Accuracy of one fitted coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsRow {
    /// `||beta_hat - beta0||_2^2`
    pub l2_sq: f64,
    /// `(1/n) ||X (beta_hat - beta0)||_2^2` on the training design.
    pub lin_pred: f64,
    pub mspe_test: f64,
    pub tpr: f64,
    /// False discoveries over selected coefficients.
    pub fdr: f64,
    /// False discoveries over true zeros.
    pub fpr: f64,
    pub model_size: usize,
}

impl MetricsRow {
    pub const NAMES: [&'static str; 7] =
        ["l2_sq", "lin_pred", "mspe_test", "tpr", "fdr", "fpr", "model_size"];

    pub fn values(&self) -> [f64; 7] {
        [
            self.l2_sq,
            self.lin_pred,
            self.mspe_test,
            self.tpr,
            self.fdr,
            self.fpr,
            self.model_size as f64,
        ]
    }
}

pub fn evaluate(
    beta_hat: &[f64],
    beta0: &[f64],
    train: &Dataset,
    test: &Dataset,
) -> Result<MetricsRow> {
    let p = beta0.len();
    if beta_hat.len() != p || train.p() != p || test.p() != p {
        return Err(mismatch(format!(
            "evaluate: beta_hat {}, beta0 {}, train p {}, test p {}",
            beta_hat.len(),
            p,
            train.p(),
            test.p()
        )));
    }
    let diff: Vec<f64> = beta_hat.iter().zip(beta0).map(|(a, b)| a - b).collect();
    let l2_sq = diff.iter().map(|d| d * d).sum();
    let lin_pred = train.x().mul_vec(&diff).iter().map(|v| v * v).sum::<f64>() / train.n() as f64;
    let mspe_test = test
        .residuals(beta_hat, 0.0)?
        .iter()
        .map(|r| r * r)
        .sum::<f64>()
        / test.n() as f64;

    let selected: Vec<bool> = beta_hat.iter().map(|b| b.abs() > SUPPORT_THRESHOLD).collect();
    let truth: Vec<bool> = beta0.iter().map(|b| *b != 0.0).collect();
    let s_star = truth.iter().filter(|t| **t).count();
    let model_size = selected.iter().filter(|s| **s).count();
    let true_pos = selected.iter().zip(&truth).filter(|(s, t)| **s && **t).count();
    let false_pos = model_size - true_pos;
    let tpr = if s_star == 0 {
        1.0
    } else {
        true_pos as f64 / s_star as f64
    };
    let fdr = false_pos as f64 / model_size.max(1) as f64;
    let fpr = if p > s_star {
        false_pos as f64 / (p - s_star) as f64
    } else {
        0.0
    };
    Ok(MetricsRow {
        l2_sq,
        lin_pred,
        mspe_test,
        tpr,
        fdr,
        fpr,
        model_size,
    })
}

/// Mean and standard deviation of each metric over replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub scenario_id: String,
    pub method: String,
    pub mean: [f64; 7],
    pub sd: [f64; 7],
    pub replications: usize,
}

impl AggregateRow {
    pub fn from_rows(scenario_id: &str, method: &str, rows: &[MetricsRow]) -> Self {
        let count = rows.len();
        let mut mean = [0.0; 7];
        let mut sd = [0.0; 7];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row.values()) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= count as f64;
        }
        if count > 1 {
            for row in rows {
                for ((s, v), m) in sd.iter_mut().zip(row.values()).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            for s in sd.iter_mut() {
                *s = (*s / (count - 1) as f64).sqrt();
            }
        }
        AggregateRow {
            scenario_id: scenario_id.to_string(),
            method: method.to_string(),
            mean,
            sd,
            replications: count,
        }
    }

    pub fn mean_of(&self, metric: &str) -> f64 {
        self.mean[metric_index(metric)]
    }

    pub fn sd_of(&self, metric: &str) -> f64 {
        self.sd[metric_index(metric)]
    }
}

fn metric_index(metric: &str) -> usize {
    MetricsRow::NAMES
        .iter()
        .position(|m| *m == metric)
        .unwrap_or_else(|| panic!("unknown metric {}", metric))
}

/// Training and test data of one replication.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub train: Dataset,
    pub test: Dataset,
    pub beta0: Vec<f64>,
    pub fold_seed: u64,
}

/// Draws the data of replication `rep`.
pub fn generate(spec: &ScenarioSpec, rep: usize) -> Result<Replicate> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(rep as u64));
    let beta0 = gen_beta0(spec.p, spec.s_star)?;
    let x = gen_design(spec.n, spec.p, spec.rho_x, &mut rng)?;
    let noise = gen_noise(&spec.noise, spec.n, &mut rng)?;
    let y: Vec<f64> = x.mul_vec(&beta0).iter().zip(&noise).map(|(a, e)| a + e).collect();
    let x_test = gen_design(spec.n_test, spec.p, spec.rho_x, &mut rng)?;
    // test responses follow the uncontaminated model
    let noise_test = gen_noise(spec.noise.base(), spec.n_test, &mut rng)?;
    let y_test: Vec<f64> = x_test
        .mul_vec(&beta0)
        .iter()
        .zip(&noise_test)
        .map(|(a, e)| a + e)
        .collect();
    let fold_seed = rng.next_u64();
    Ok(Replicate {
        train: Dataset::new(x, y)?,
        test: Dataset::new(x_test, y_test)?,
        beta0,
        fold_seed,
    })
}

/// Per-replication metrics of every method in one replication.
pub fn run_replication(spec: &ScenarioSpec, rep: usize) -> Result<Vec<MetricsRow>> {
    let data = generate(spec, rep)?;
    let ratio = spec
        .lambda_ratio
        .unwrap_or_else(|| default_ratio(spec.n, spec.p));
    let cfg = FitConfig::default();
    let grid = make_grid(&data.train, spec.nlambda, ratio, cfg.fit_intercept)?;
    spec.methods
        .iter()
        .map(|m| {
            let kind = m.loss();
            let score = match (spec.score, kind) {
                (ScoreSpec::Mse, _) => CvScore::Mse,
                (ScoreSpec::ExpLoss, LossKind::Exponential { tau }) => CvScore::ExpLoss { tau },
                (ScoreSpec::ExpLoss, _) => CvScore::ExpLoss { tau: DEFAULT_TAU },
            };
            let fit = cv_fit(
                &data.train,
                &kind,
                &cfg,
                &grid,
                spec.cv_folds,
                data.fold_seed,
                score,
                m.lambda_rule,
            )?;
            evaluate(&fit.selected_fit().beta, &data.beta0, &data.train, &data.test)
        })
        .collect()
}

/// Results of a scenario: per-method, per-replication metrics and aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub scenario_id: String,
    pub methods: Vec<String>,
    /// `per_replication[rep][method]`
    pub per_replication: Vec<Vec<MetricsRow>>,
    pub aggregates: Vec<AggregateRow>,
}

impl ScenarioOutcome {
    pub fn method_rows(&self, method: usize) -> Vec<MetricsRow> {
        self.per_replication.iter().map(|r| r[method]).collect()
    }
}

/// Runs `replications` independent replications of `spec`.
pub fn run_scenario(spec: &ScenarioSpec, replications: usize) -> Result<ScenarioOutcome> {
    run_scenario_with_progress(spec, replications, &|_| {})
}

/// [`run_scenario`] that calls `progress(rep)` as each replication finishes.
pub fn run_scenario_with_progress(
    spec: &ScenarioSpec,
    replications: usize,
    progress: &(dyn Fn(usize) + Sync),
) -> Result<ScenarioOutcome> {
    spec.validate()?;
    if replications == 0 {
        return Err(invalid("replications must be at least 1"));
    }
    let per_replication: Vec<Vec<MetricsRow>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let rows = run_replication(spec, rep).map_err(|e| {
                log_context(e, &format!("scenario {} replication {}", spec.id, rep))
            })?;
            progress(rep);
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let methods: Vec<String> = spec.methods.iter().map(|m| m.label()).collect();
    let aggregates = methods
        .iter()
        .enumerate()
        .map(|(k, label)| {
            let rows: Vec<MetricsRow> = per_replication.iter().map(|r| r[k]).collect();
            AggregateRow::from_rows(&spec.id, label, &rows)
        })
        .collect();
    Ok(ScenarioOutcome {
        scenario_id: spec.id.clone(),
        methods,
        per_replication,
        aggregates,
    })
}

fn log_context(e: SolverError, ctx: &str) -> SolverError {
    let msg = format!("{}: {}", ctx, e.message());
    match e {
        SolverError::DimensionMismatch(_) => SolverError::DimensionMismatch(msg),
        SolverError::NonfiniteInput(_) => SolverError::NonfiniteInput(msg),
        SolverError::InvalidConfig(_) => SolverError::InvalidConfig(msg),
        SolverError::DegenerateColumn(_) => SolverError::DegenerateColumn(msg),
        SolverError::Io(_) => SolverError::Io(msg),
        SolverError::Parse(_) => SolverError::Parse(msg),
    }
}

/// Long-format CSV: `scenario_id,method,metric,mean,sd,replications`.
pub fn write_results_csv<W: std::io::Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| SolverError::Io(e.to_string());
    w.write_record(["scenario_id", "method", "metric", "mean", "sd", "replications"])
        .map_err(io)?;
    for row in rows {
        for (k, name) in MetricsRow::NAMES.iter().enumerate() {
            w.write_record([
                row.scenario_id.as_str(),
                row.method.as_str(),
                name,
                &row.mean[k].to_string(),
                &row.sd[k].to_string(),
                &row.replications.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}
