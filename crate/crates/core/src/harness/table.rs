//! Reproduction of the comparison of approximation methods on the
//! healthy/sick model: `T_1 I_sick` with target error `1e-3`.

use std::time::Instant;

use serde::Serialize;

use crate::approximation::{adaptive_approximate, run_uniform_plan, uniform_plan, ApproxOptions, ApproxTrace, UniformPlan};
use crate::binary::{analytic_transient, BinaryModel};
use crate::ergodicity::uniform_ergodic_plan;
use crate::error::Result;
use crate::gamble::Gamble;
use crate::operator::IntervalRateOperator;

const HORIZON: f64 = 1.0;
const TARGET: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Config {
    Uniform,
    UniformSteps(u64),
    Adaptive(u64),
    UniformErgodic(u64),
}

impl Config {
    fn label(&self) -> String {
        match self {
            Config::Uniform | Config::UniformSteps(_) => "Uniform".into(),
            Config::Adaptive(m) => format!("Adaptive with m = {m}"),
            Config::UniformErgodic(m) => format!("Uniform ergodic with m = {m}"),
        }
    }
}

const CONFIGS: [Config; 5] = [
    Config::Uniform,
    Config::UniformSteps(250),
    Config::Adaptive(1),
    Config::Adaptive(20),
    Config::UniformErgodic(1),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub method: String,
    /// Total number of iterations.
    pub iterations: u64,
    /// Mean duration in seconds without tracking the running bound.
    pub duration_untracked: f64,
    /// Mean duration in seconds with the running bound tracked.
    pub duration_tracked: f64,
    pub epsilon_prime: f64,
    /// Distance to the closed-form solution.
    pub actual_error: f64,
}

fn run(q: &IntervalRateOperator, f: &Gamble, config: Config, plan: Option<&UniformPlan>, track: bool) -> Result<ApproxTrace> {
    let opts = ApproxOptions::tracking(track);
    match (config, plan) {
        (Config::Adaptive(m), _) => adaptive_approximate(q, f, HORIZON, TARGET, m, &opts),
        (_, Some(plan)) => run_uniform_plan(q, f, plan, &opts),
        (_, None) => unreachable!("grid configurations carry a plan"),
    }
}

fn mean_duration(repeats: u32, mut body: impl FnMut() -> Result<ApproxTrace>) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..repeats {
        let start = Instant::now();
        std::hint::black_box(body()?);
        total += start.elapsed().as_secs_f64();
    }
    Ok(total / f64::from(repeats))
}

/// Runs the five configurations. Durations are averaged over `repeats` runs
/// and exclude the step-count search of the planned methods.
pub fn reproduce_table(repeats: u32) -> Result<Vec<TableRow>> {
    let repeats = repeats.max(1);
    let model = BinaryModel::healthy_sick();
    let q = model.to_operator();
    let f = Gamble::indicator(2, &[1])?;
    let exact = analytic_transient(&model, &f, HORIZON)?;

    CONFIGS
        .iter()
        .map(|&config| {
            let plan = match config {
                Config::Uniform => Some(uniform_plan(&q, &f, HORIZON, TARGET)?),
                Config::UniformSteps(n) => Some(UniformPlan {
                    n,
                    delta: HORIZON / n as f64,
                    target_epsilon: TARGET,
                }),
                Config::UniformErgodic(m) => Some(uniform_ergodic_plan(&q, &f, HORIZON, TARGET, m)?),
                Config::Adaptive(_) => None,
            };
            let trace = run(&q, &f, config, plan.as_ref(), true)?;
            let duration_untracked = mean_duration(repeats, || run(&q, &f, config, plan.as_ref(), false))?;
            let duration_tracked = mean_duration(repeats, || run(&q, &f, config, plan.as_ref(), true))?;
            Ok(TableRow {
                method: config.label(),
                iterations: trace.total_iterations,
                duration_untracked,
                duration_tracked,
                epsilon_prime: trace.epsilon_prime,
                actual_error: exact.distance(&trace.result),
            })
        })
        .collect()
}

/// `x` with three significant digits in positional notation.
pub fn three_significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (2 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may carry into a new digit, e.g. 9.996 -> 10.00
    let carried = s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len() > 3;
    if carried && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

pub fn table_to_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("method,N,D_eps,D_eps_prime,eps_prime_x1e3,eps_a_x1e3\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.method,
            r.iterations,
            three_significant(r.duration_untracked),
            three_significant(r.duration_tracked),
            three_significant(r.epsilon_prime * 1e3),
            three_significant(r.actual_error * 1e3),
        ));
    }
    out
}
