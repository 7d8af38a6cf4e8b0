use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use explasso::config::{FitConfig, FitResult, Init, DEFAULT_HUBER_K, DEFAULT_TAU};
use explasso::csvio::{load_dataset, FitReport};
use explasso::sim::{
    presets, run_scenario_with_progress, write_results_csv, AggregateRow, MethodSpec,
    NoiseSpec, OutlierSpec, ScenarioSpec,
};
use explasso::theory::{TheoryInputs, TheoryReport};
use explasso::tune::{cv_fit, default_ratio, make_grid, CvFit, CvScore, LambdaRule};
use explasso::{fit, standardize, Dataset, LossKind, SolverError};

#[derive(Parser)]
#[command(name = "explasso", version, about = "Exponential-loss robust Lasso")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit at a fixed penalty, or at the cross-validated one with --cv.
    Fit(FitArgs),
    /// Cross-validate the penalty and fit at the selected value.
    Cv(CvArgs),
    /// Run a simulation scenario and write aggregated metrics.
    Simulate(SimulateArgs),
    /// Print the constants of the error bound.
    Theory(TheoryArgs),
    /// Regenerate one of the benchmark tables.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Response column name (or zero-based index).
    #[arg(long)]
    response: String,
    /// Robustness parameter of the exponential loss.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Loss to fit.
    #[arg(long, value_enum, default_value_t = LossArg::Exponential)]
    loss: LossArg,
    /// Huber threshold, used with --loss huber.
    #[arg(long, default_value_t = DEFAULT_HUBER_K)]
    huber_k: f64,
    /// Fit on the raw columns instead of standardized ones.
    #[arg(long)]
    no_standardize: bool,
    /// Starting coefficients: a fit report written by this tool.
    #[arg(long)]
    warm_start: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// Number of folds.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Seed of the fold assignment.
    #[arg(long, env = "EXPLASSO_SEED", default_value_t = 1)]
    seed: u64,
    /// Number of penalties on the grid.
    #[arg(long, default_value_t = 100)]
    nlambda: usize,
    /// Smallest penalty as a fraction of the largest [default: 1e-3 if n < p, else 1e-4].
    #[arg(long)]
    lambda_ratio: Option<f64>,
    /// Held-out score.
    #[arg(long, value_enum, default_value_t = ScoreArg::Mse)]
    score: ScoreArg,
    /// Penalty selection rule.
    #[arg(long, value_enum, default_value_t = RuleArg::Min)]
    rule: RuleArg,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Penalty (on the fitting scale).
    #[arg(long, conflicts_with = "cv", required_unless_present = "cv")]
    lambda: Option<f64>,
    /// Choose the penalty by cross-validation.
    #[arg(long)]
    cv: bool,
    #[command(flatten)]
    grid: GridArgs,
    /// Fit report destination.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Cross-validation table destination (lambda, cv_mean, cv_se, nnz).
    #[arg(long)]
    out: PathBuf,
    /// Fit report at the selected penalty [default: <out> with extension .fit.txt].
    #[arg(long)]
    fit_out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario TOML file, or the id of a bundled scenario such as table3_gauss.
    #[arg(long)]
    scenario: Option<String>,
    #[command(flatten)]
    inline: InlineScenario,
    /// Replications.
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Base seed; replication r uses seed + r. Overrides the scenario's seed.
    #[arg(long, env = "EXPLASSO_SEED")]
    seed: Option<u64>,
    /// Worker threads [default: available parallelism].
    #[arg(long)]
    jobs: Option<usize>,
    /// Results CSV destination.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InlineScenario {
    /// Scenario id when no file is given.
    #[arg(long, default_value = "inline", conflicts_with = "scenario")]
    id: String,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 120)]
    p: usize,
    #[arg(long, default_value_t = 10)]
    s_star: usize,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Noise family: gauss, student, cauchy or contaminated.
    #[arg(long, default_value = "gauss")]
    noise: String,
    /// Gaussian standard deviation (gauss, or the base of contaminated).
    #[arg(long, default_value_t = 1.0)]
    sd: f64,
    /// Degrees of freedom (student).
    #[arg(long, default_value_t = 3.0)]
    df: f64,
    /// Fraction of contaminated responses (contaminated).
    #[arg(long, default_value_t = 0.1)]
    rate: f64,
    /// Mean magnitude of outlier shifts (contaminated).
    #[arg(long, default_value_t = 10.0)]
    outlier_mean: f64,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Half-width of the curvature interval; must be below 1/sqrt(tau).
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// P(|e| <= c).
    #[arg(long, default_value_t = 0.9)]
    p0: f64,
    /// Restricted eigenvalue of the design.
    #[arg(long, default_value_t = 0.5)]
    phi_min: f64,
    #[arg(long, default_value_t = 10)]
    s: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 120)]
    p: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Sup-norm bound on the design rows.
    #[arg(long = "K", default_value_t = 1.0)]
    k: f64,
    /// Print CSV instead of the aligned text form.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Table id: t1 to t6.
    #[arg(long)]
    table: String,
    /// Replications per scenario.
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Base seed for every scenario of the table.
    #[arg(long, env = "EXPLASSO_SEED")]
    seed: Option<u64>,
    /// Worker threads [default: available parallelism].
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for <table>.csv and <table>.txt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Exponential,
    Squared,
    Huber,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScoreArg {
    Mse,
    ExpLoss,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Min,
    OneSe,
}

/// A failure and the exit code it maps to.
enum Failure {
    /// Bad input, configuration or usage: exit code 2.
    Usage(SolverError),
    /// The computation itself failed: exit code 1.
    Runtime(SolverError),
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        Failure::Usage(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.into())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error [{}]: {}", e.kind(), e.message());
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error [{}]: {}", e.kind(), e.message());
            ExitCode::from(1)
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(SolverError::InvalidConfig(msg.into()))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(SolverError::Io(format!("{}: {}", path.display(), e))))
}

fn set_jobs(jobs: Option<usize>) -> CliResult<()> {
    if let Some(j) = jobs {
        if j == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    Ok(())
}

/// Data on the fitting scale plus what is needed to report on the original one.
struct Prepared {
    raw: Dataset,
    data: Dataset,
    scaling: Option<explasso::Standardization>,
    kind: LossKind,
    cfg: FitConfig,
}

fn prepare(a: &DataArgs) -> CliResult<Prepared> {
    let raw = load_dataset(&a.data, &a.response)?;
    let (data, scaling) = if a.no_standardize {
        (raw.clone(), None)
    } else {
        let (d, s) = standardize(&raw)?;
        (d, Some(s))
    };
    let kind = match a.loss {
        LossArg::Exponential => LossKind::exponential(a.tau),
        LossArg::Squared => LossKind::Squared,
        LossArg::Huber => LossKind::huber(a.huber_k),
    };
    kind.validate()?;
    let mut cfg = FitConfig::default().with_tau(a.tau);
    if let Some(path) = &a.warm_start {
        let report = FitReport::load(path)?;
        let beta = report.coefficients_for(&raw)?;
        let (beta, b0) = match &scaling {
            Some(s) => s.to_standardized(&beta, report.intercept),
            None => (beta, report.intercept),
        };
        cfg = cfg.with_init(Init::Supplied {
            beta,
            intercept: Some(b0),
        });
    }
    Ok(Prepared {
        raw,
        data,
        scaling,
        kind,
        cfg,
    })
}

fn grid_cv(p: &Prepared, g: &GridArgs) -> CliResult<CvFit> {
    let ratio = g
        .lambda_ratio
        .unwrap_or_else(|| default_ratio(p.data.n(), p.data.p()));
    let grid = make_grid(&p.data, g.nlambda, ratio, p.cfg.fit_intercept)?;
    let score = match g.score {
        ScoreArg::Mse => CvScore::Mse,
        ScoreArg::ExpLoss => CvScore::ExpLoss {
            tau: match p.kind {
                LossKind::Exponential { tau } => tau,
                _ => DEFAULT_TAU,
            },
        },
    };
    let rule = match g.rule {
        RuleArg::Min => LambdaRule::Min,
        RuleArg::OneSe => LambdaRule::OneSe,
    };
    // a warm start only makes sense at a single penalty
    let cfg = p.cfg.clone().with_init(Init::default());
    let fit = cv_fit(&p.data, &p.kind, &cfg, &grid, g.k, g.seed, score, rule)?;
    Ok(fit)
}

fn report(p: &Prepared, fit: &FitResult, extra: Vec<(String, String)>) -> FitReport {
    let (beta, intercept) = match &p.scaling {
        Some(s) => s.to_original(&fit.beta, fit.intercept),
        None => (fit.beta.clone(), fit.intercept),
    };
    let w = &fit.weights;
    let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
    let wmax = w.iter().copied().fold(0.0, f64::max);
    let wmean = w.iter().sum::<f64>() / w.len() as f64;
    let mut metadata: Vec<(String, String)> = vec![
        ("loss".into(), p.kind.label()),
        ("lambda".into(), fit.lambda.to_string()),
        ("standardized".into(), p.scaling.is_some().to_string()),
        ("n".into(), p.data.n().to_string()),
        ("p".into(), p.data.p().to_string()),
        ("status".into(), if fit.converged() { "converged" } else { "max_iter_reached" }.into()),
        ("iterations".into(), fit.iterations.to_string()),
        ("objective".into(), fit.final_objective().to_string()),
        ("kkt_residual".into(), fit.kkt_residual.to_string()),
        ("nonzero".into(), fit.nnz().to_string()),
        ("weight_min".into(), wmin.to_string()),
        ("weight_mean".into(), wmean.to_string()),
        ("weight_max".into(), wmax.to_string()),
        ("downweighted".into(), w.iter().filter(|v| **v < 0.5).count().to_string()),
    ];
    if fit.degenerate_columns > 0 {
        metadata.push(("degenerate_columns".into(), fit.degenerate_columns.to_string()));
    }
    metadata.extend(extra);
    FitReport {
        metadata,
        intercept,
        terms: (0..p.raw.p()).map(|j| p.raw.feature_name(j)).collect(),
        coefficients: beta,
    }
}

fn cmd_fit(a: FitArgs) -> CliResult<()> {
    let p = prepare(&a.data)?;
    let (result, extra) = if a.cv {
        let cv = grid_cv(&p, &a.grid)?;
        let extra = vec![
            ("lambda_min".into(), cv.cv.lambda_min.to_string()),
            ("lambda_1se".into(), cv.cv.lambda_1se.to_string()),
            ("folds".into(), a.grid.k.to_string()),
            ("seed".into(), a.grid.seed.to_string()),
        ];
        (cv.selected_fit().clone(), extra)
    } else {
        let lambda = a.lambda.expect("clap enforces --lambda without --cv");
        let cfg = p.cfg.clone().with_lambda(lambda);
        (fit(&p.data, &p.kind, &cfg)?, Vec::new())
    };
    report(&p, &result, extra).write(create(&a.out)?)?;
    Ok(())
}

fn cmd_cv(a: CvArgs) -> CliResult<()> {
    let p = prepare(&a.data)?;
    let cv = grid_cv(&p, &a.grid)?;
    let mut out = create(&a.out)?;
    writeln!(out, "lambda,cv_mean,cv_se,nnz")?;
    for (l, fit) in cv.path.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            cv.cv.grid.values()[l],
            cv.cv.cv_mean[l],
            cv.cv.cv_se[l],
            fit.nnz()
        )?;
    }
    out.flush()?;
    let fit_out = a
        .fit_out
        .unwrap_or_else(|| a.out.with_extension("fit.txt"));
    let extra = vec![
        ("lambda_min".into(), cv.cv.lambda_min.to_string()),
        ("lambda_1se".into(), cv.cv.lambda_1se.to_string()),
        ("folds".into(), a.grid.k.to_string()),
        ("seed".into(), a.grid.seed.to_string()),
    ];
    report(&p, cv.selected_fit(), extra).write(create(&fit_out)?)?;
    Ok(())
}

fn inline_scenario(s: &InlineScenario) -> CliResult<ScenarioSpec> {
    let noise = match s.noise.as_str() {
        "gauss" => NoiseSpec::Gauss { sd: s.sd },
        "student" => NoiseSpec::Student { df: s.df },
        "cauchy" => NoiseSpec::Cauchy,
        "contaminated" => NoiseSpec::Contaminated {
            base: Box::new(NoiseSpec::Gauss { sd: s.sd }),
            rate: s.rate,
            outlier: OutlierSpec {
                mean: s.outlier_mean,
                ..OutlierSpec::default()
            },
        },
        other => {
            return Err(usage(format!(
                "unknown noise {:?}; valid names: {}",
                other,
                NoiseSpec::FAMILIES.join(", ")
            )))
        }
    };
    let mut spec = ScenarioSpec::new(&s.id, s.n, s.p, s.s_star, noise);
    spec.rho_x = s.rho;
    spec.methods = presets::compared_methods();
    spec.methods[0] = MethodSpec::exponential(s.tau);
    Ok(spec)
}

fn load_scenario(name: &str) -> CliResult<ScenarioSpec> {
    let path = Path::new(name);
    if path.exists() {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(SolverError::Io(format!("{}: {}", name, e))))?;
        return Ok(ScenarioSpec::from_toml(&text)?);
    }
    presets::scenario_by_id(name).ok_or_else(|| {
        Failure::Usage(SolverError::Io(format!(
            "{}: no such file or bundled scenario",
            name
        )))
    })
}

fn run_logged(spec: &ScenarioSpec, reps: usize) -> CliResult<Vec<AggregateRow>> {
    spec.validate()?;
    let start = Instant::now();
    let done = AtomicUsize::new(0);
    eprintln!("{}: {} replications", spec.id, reps);
    let outcome = run_scenario_with_progress(spec, reps, &|_| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        eprintln!("{}: {}/{} replications done", spec.id, k, reps);
    })
    .map_err(Failure::Runtime)?;
    eprintln!("{}: finished in {:.1}s", spec.id, start.elapsed().as_secs_f64());
    Ok(outcome.aggregates)
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    set_jobs(a.jobs)?;
    let mut spec = match &a.scenario {
        Some(name) => load_scenario(name)?,
        None => inline_scenario(&a.inline)?,
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if a.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let rows = run_logged(&spec, a.reps)?;
    let mut out = create(&a.out)?;
    write_results_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_theory(a: TheoryArgs) -> CliResult<()> {
    let report = TheoryReport::compute(TheoryInputs {
        k: a.k,
        tau: a.tau,
        c: a.c,
        p0: a.p0,
        phi_min: a.phi_min,
        s: a.s,
        n: a.n,
        p: a.p,
        delta: a.delta,
    })?;
    if a.csv {
        print!("{}", report.to_csv());
    } else {
        print!("{}", report);
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    set_jobs(a.jobs)?;
    let mut scenarios = presets::table(&a.table)?;
    if a.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let mut rows = Vec::new();
    for spec in scenarios.iter_mut() {
        if let Some(seed) = a.seed {
            spec.seed = seed;
        }
        rows.extend(run_logged(spec, a.reps)?);
    }
    fs::create_dir_all(&a.out)?;
    let mut csv = create(&a.out.join(format!("{}.csv", a.table)))?;
    write_results_csv(&rows, &mut csv)?;
    csv.flush()?;
    let title = format!("table {} ({} replications)", a.table, a.reps);
    let text = presets::render_table(&title, &scenarios, &rows);
    fs::write(a.out.join(format!("{}.txt", a.table)), &text)?;
    print!("{}", text);
    Ok(())
}
