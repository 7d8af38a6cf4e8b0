//! Scenario sets behind `explasso bench`, one per benchmark table.

use super::{AggregateRow, MethodSpec, NoiseSpec, OutlierSpec, ScenarioSpec};
use crate::config::{DEFAULT_HUBER_K, DEFAULT_TAU};
use crate::tune::LambdaRule;
use crate::error::{invalid, Result};

pub const TABLE_IDS: [&str; 6] = ["t1", "t2", "t3", "t4", "t5", "t6"];

/// Taus compared by the sensitivity table.
pub const TAU_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

fn gauss(sd: f64) -> NoiseSpec {
    NoiseSpec::Gauss { sd }
}

fn student3() -> NoiseSpec {
    NoiseSpec::Student { df: 3.0 }
}

fn outliers(base: NoiseSpec, rate: f64) -> NoiseSpec {
    NoiseSpec::Contaminated {
        base: Box::new(base),
        rate,
        outlier: OutlierSpec::default(),
    }
}

fn heavy_tail_noises() -> Vec<(&'static str, NoiseSpec)> {
    vec![
        ("gauss", gauss(1.0)),
        ("gauss3", gauss(3.0)),
        ("t3", student3()),
        ("cauchy", NoiseSpec::Cauchy),
    ]
}

/// The proposed loss at `lambda_min` against the squared and Huber baselines at
/// `lambda_1se`, the default selection of the reference implementations of those
/// baselines.
pub fn compared_methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec::exponential(DEFAULT_TAU),
        MethodSpec::squared().with_rule(LambdaRule::OneSe),
        MethodSpec::huber(DEFAULT_HUBER_K).with_rule(LambdaRule::OneSe),
    ]
}

fn scenario(id: String, n: usize, p: usize, rho: f64, noise: NoiseSpec) -> ScenarioSpec {
    let mut spec = ScenarioSpec::new(&id, n, p, 10, noise);
    spec.rho_x = rho;
    spec.methods = compared_methods();
    spec
}

/// Comparison of the three losses on one design.
fn method_table(prefix: &str, n: usize, p: usize, rho: f64) -> Vec<ScenarioSpec> {
    heavy_tail_noises()
        .into_iter()
        .map(|(name, noise)| scenario(format!("{}_{}", prefix, name), n, p, rho, noise))
        .collect()
}

fn outlier_table() -> Vec<ScenarioSpec> {
    let mut out = Vec::new();
    for (name, base) in [("gauss", gauss(1.0)), ("t3", student3())] {
        for pct in [10, 20, 30] {
            let id = format!("table5_{}_out{}", name, pct);
            out.push(scenario(id, 300, 500, 0.0, outliers(base.clone(), pct as f64 / 100.0)));
        }
    }
    out
}

fn tau_table() -> Vec<ScenarioSpec> {
    let noises = vec![
        ("gauss", gauss(1.0)),
        ("gauss_out20", outliers(gauss(1.0), 0.2)),
        ("gauss3", gauss(3.0)),
        ("t3", student3()),
        ("cauchy", NoiseSpec::Cauchy),
    ];
    noises
        .into_iter()
        .map(|(name, noise)| {
            let mut spec = scenario(format!("table6_{}", name), 100, 120, 0.0, noise);
            spec.methods = TAU_GRID
                .iter()
                .map(|&tau| MethodSpec::exponential(tau))
                .collect();
            spec
        })
        .collect()
}

/// Scenarios of a benchmark table.
pub fn table(id: &str) -> Result<Vec<ScenarioSpec>> {
    Ok(match id {
        "t1" => method_table("table1", 100, 120, 0.0),
        "t2" => method_table("table2", 100, 120, 0.5),
        "t3" => method_table("table3", 300, 500, 0.0),
        "t4" => method_table("table4", 300, 500, 0.5),
        "t5" => outlier_table(),
        "t6" => tau_table(),
        other => {
            return Err(invalid(format!(
                "unknown table id {:?}; expected one of {}",
                other,
                TABLE_IDS.join(", ")
            )))
        }
    })
}

/// Looks up a bundled scenario by id, e.g. `table3_gauss`.
pub fn scenario_by_id(id: &str) -> Option<ScenarioSpec> {
    TABLE_IDS
        .iter()
        .flat_map(|t| table(t).unwrap_or_default())
        .find(|s| s.id == id)
}

/// Text table with one row per (scenario, method) and `mean (sd)` cells.
pub fn render_table(title: &str, scenarios: &[ScenarioSpec], rows: &[AggregateRow]) -> String {
    let metrics = ["l2_sq", "lin_pred", "mspe_test", "tpr", "fdr"];
    let headers = ["||b-b0||^2", "lin. pred.", "MSPE_test", "TPR", "FDR"];
    let mut out = format!("{}\n", title);
    let noise_w = scenarios
        .iter()
        .map(|s| s.noise.label().len())
        .chain(std::iter::once(5))
        .max()
        .unwrap_or(5);
    let method_w = rows.iter().map(|r| r.method.len()).chain(std::iter::once(6)).max().unwrap_or(6);
    out.push_str(&format!("{:<noise_w$}  {:<method_w$}", "noise", "method"));
    for h in headers {
        out.push_str(&format!("  {:>14}", h));
    }
    out.push('\n');
    let width = noise_w + method_w + 2 + 16 * headers.len();
    out.push_str(&"-".repeat(width));
    out.push('\n');
    for spec in scenarios {
        let mut first = true;
        for row in rows.iter().filter(|r| r.scenario_id == spec.id) {
            let noise = if first { spec.noise.label() } else { String::new() };
            first = false;
            out.push_str(&format!("{:<noise_w$}  {:<method_w$}", noise, row.method));
            for m in metrics {
                let cell = format!("{} ({})", fmt_num(row.mean_of(m)), fmt_num(row.sd_of(m)));
                out.push_str(&format!("  {:>14}", cell));
            }
            out.push('\n');
        }
        out.push_str(&"-".repeat(width));
        out.push('\n');
    }
    out
}

fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        format!("{}", v)
    } else if v.abs() >= 1e5 {
        ">1e5".to_string()
    } else if v.abs() >= 10.0 {
        format!("{:.1}", v)
    } else {
        format!("{:.2}", v)
    }
}
