//! Query specifications and their dispatch to the numerical methods.

use std::fmt::Write as _;
use std::time::Instant;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::approximation::{adaptive_approximate, run_uniform_plan, uniform_plan, ApproxOptions, ApproxTrace, UniformPlan};
use crate::binary::{analytic_limit, analytic_transient, BinaryModel};
use crate::ergodicity::{limit_approximate, uniform_ergodic_plan, LimitOptions, LimitStrategy, DEFAULT_MAX_ITERATIONS};
use crate::error::Error;
use crate::gamble::Gamble;
use crate::operator::IntervalRateOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Uniform,
    Adaptive,
    UniformErgodic,
    Limit,
}

/// A gamble given either as the indicator of a set of labels or as a map
/// from labels to values; unlisted states map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GambleSpec {
    Indicator(Vec<String>),
    Values(IndexMap<String, f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Horizon {
    Finite(f64),
    Named(HorizonName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HorizonName {
    Infinity,
}

impl Horizon {
    pub const INFINITY: Horizon = Horizon::Named(HorizonName::Infinity);

    fn finite(&self) -> Option<f64> {
        match *self {
            Horizon::Finite(t) => Some(t),
            Horizon::Named(HorizonName::Infinity) => None,
        }
    }
}

fn one() -> u64 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub f: GambleSpec,
    pub t: Horizon,
    pub epsilon: f64,
    pub method: Method,
    /// Block length of the adaptive method, or power of the one-step operator
    /// in the ergodic methods.
    #[serde(default = "one")]
    pub m: u64,
    #[serde(default = "yes")]
    pub track_bound: bool,
    /// Limit method only: fixed step size, selecting the running-bound strategy.
    #[serde(default)]
    pub delta_override: Option<f64>,
    /// Grid methods only: stop once the remaining-cost criterion holds.
    #[serde(default)]
    pub early_stop: bool,
    /// Uniform method only: fixed step count instead of the planned one.
    #[serde(default)]
    pub steps: Option<u64>,
}

impl QuerySpec {
    pub fn new(f: GambleSpec, t: Horizon, epsilon: f64, method: Method) -> Self {
        Self {
            f,
            t,
            epsilon,
            method,
            m: 1,
            track_bound: true,
            delta_override: None,
            early_stop: false,
            steps: None,
        }
    }

    fn validate(&self) -> Result<(), QueryError> {
        let invalid = |m: &str| Err(QueryError::Invalid(m.to_string()));
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return invalid("epsilon must be finite and > 0");
        }
        if self.m == 0 {
            return invalid("m must be a positive integer");
        }
        match (self.method, self.t.finite()) {
            (Method::Limit, Some(_)) => return invalid("method limit requires t = \"infinity\""),
            (Method::Limit, None) => {}
            (_, None) => return invalid("t = \"infinity\" requires method limit"),
            (_, Some(t)) if !t.is_finite() || t < 0.0 => return invalid("t must be finite and >= 0"),
            _ => {}
        }
        if self.delta_override.is_some() && self.method != Method::Limit {
            return invalid("delta_override is only valid with method limit");
        }
        if self.steps.is_some() && self.method != Method::Uniform {
            return invalid("steps is only valid with method uniform");
        }
        if self.steps == Some(0) {
            return invalid("steps must be positive");
        }
        Ok(())
    }
}

/// Builds the gamble named by `spec` on the states of `q`.
pub fn resolve_gamble(q: &IntervalRateOperator, spec: &GambleSpec) -> Result<Gamble, QueryError> {
    let space = q.space();
    let index = |label: &str| {
        space
            .index_of(label)
            .ok_or_else(|| QueryError::Invalid(format!("unknown state {label:?}")))
    };
    let mut values = vec![0.0; q.size()];
    match spec {
        GambleSpec::Indicator(labels) => {
            for label in labels {
                values[index(label)?] = 1.0;
            }
        }
        GambleSpec::Values(map) => {
            for (label, v) in map {
                values[index(label)?] = *v;
            }
        }
    }
    Gamble::new(values).map_err(|e| QueryError::Invalid(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("invalid query: {0}")]
    Invalid(String),
    #[error(transparent)]
    Computation(#[from] Error),
}

impl QueryError {
    /// 3 for queries that do not fit the model, 4 for failed computations.
    pub fn exit_code(&self) -> i32 {
        match self {
            QueryError::Invalid(_) => 3,
            QueryError::Computation(_) => 4,
        }
    }
}

/// Execution settings that are not part of a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub max_iterations: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Tight running bound accumulated during the iteration.
    EpsilonPrime,
    /// A priori bound, available without per-step norms.
    APriori,
    /// Error bound of the limit method.
    GuaranteedError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryReport {
    pub index: usize,
    pub query: QuerySpec,
    /// Approximation of the lower expectation, by state label.
    pub result: IndexMap<String, f64>,
    /// Limit method only: the approximated constant.
    pub value: Option<f64>,
    pub error_bound: f64,
    pub bound_kind: BoundKind,
    pub iterations: u64,
    pub converged: bool,
    /// Step size of the uniform and limit methods.
    pub delta: Option<f64>,
    /// Distance to the closed-form solution, for two-state models.
    pub true_error: Option<f64>,
    pub wall_time_s: f64,
}

fn labelled(q: &IntervalRateOperator, g: &Gamble) -> IndexMap<String, f64> {
    (0..q.size()).map(|x| (q.space().label(x), g[x])).collect()
}

/// Runs one query. `index` is echoed in the report.
pub fn run_query(
    q: &IntervalRateOperator,
    spec: &QuerySpec,
    index: usize,
    config: &RunConfig,
) -> Result<QueryReport, QueryError> {
    spec.validate()?;
    let f = resolve_gamble(q, &spec.f)?;
    let binary = BinaryModel::from_operator(q);
    let opts = ApproxOptions {
        track_bound: spec.track_bound,
        early_stop: spec.early_stop,
        loose_adaptive_bound: false,
    };
    let start = Instant::now();

    let grid = |trace: ApproxTrace, delta: Option<f64>, t: f64| -> Result<QueryReport, QueryError> {
        let wall_time_s = start.elapsed().as_secs_f64();
        let true_error = match binary {
            Some(model) => Some(analytic_transient(&model, &f, t)?.distance(&trace.result)),
            None => None,
        };
        Ok(QueryReport {
            index,
            query: spec.clone(),
            result: labelled(q, &trace.result),
            value: None,
            error_bound: trace.epsilon_prime,
            bound_kind: if trace.bound_tracked {
                BoundKind::EpsilonPrime
            } else {
                BoundKind::APriori
            },
            iterations: trace.total_iterations,
            converged: trace.epsilon_prime <= spec.epsilon,
            delta,
            true_error,
            wall_time_s,
        })
    };

    match spec.method {
        Method::Uniform | Method::UniformErgodic => {
            let t = spec.t.finite().expect("validated");
            let plan = match (spec.method, spec.steps) {
                (Method::UniformErgodic, _) => uniform_ergodic_plan(q, &f, t, spec.epsilon, spec.m)?,
                (_, Some(n)) => UniformPlan {
                    n: if t == 0.0 { 0 } else { n },
                    delta: if t == 0.0 { 0.0 } else { t / n as f64 },
                    target_epsilon: spec.epsilon,
                },
                (_, None) => uniform_plan(q, &f, t, spec.epsilon)?,
            };
            let trace = run_uniform_plan(q, &f, &plan, &opts)?;
            grid(trace, Some(plan.delta), t)
        }
        Method::Adaptive => {
            let t = spec.t.finite().expect("validated");
            let trace = adaptive_approximate(q, &f, t, spec.epsilon, spec.m, &opts)?;
            grid(trace, None, t)
        }
        Method::Limit => {
            let strategy = match spec.delta_override {
                Some(delta) => LimitStrategy::RunningBound { delta },
                None => LimitStrategy::AprioriDelta { m: spec.m },
            };
            let limit_opts = LimitOptions {
                max_iterations: config.max_iterations,
                progress: None,
            };
            let r = limit_approximate(q, &f, spec.epsilon, strategy, &limit_opts)?;
            let wall_time_s = start.elapsed().as_secs_f64();
            let true_error = binary
                .and_then(|model| analytic_limit(&model, &f).ok())
                .map(|exact| (exact - r.value).abs());
            Ok(QueryReport {
                index,
                query: spec.clone(),
                result: (0..q.size()).map(|x| (q.space().label(x), r.value)).collect(),
                value: Some(r.value),
                error_bound: r.guaranteed_error,
                bound_kind: BoundKind::GuaranteedError,
                iterations: r.iterations,
                converged: r.converged,
                delta: Some(r.delta),
                true_error,
                wall_time_s,
            })
        }
    }
}

/// Runs queries in parallel; the output keeps the input order.
pub fn run_batch(
    q: &IntervalRateOperator,
    specs: &[QuerySpec],
    config: &RunConfig,
) -> Vec<Result<QueryReport, QueryError>> {
    specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| run_query(q, spec, i, config))
        .collect()
}

/// Parses a single query object or an array of them.
pub fn parse_queries(text: &str) -> serde_json::Result<Vec<QuerySpec>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Box<QuerySpec>),
        Many(Vec<QuerySpec>),
    }
    Ok(match serde_json::from_str::<OneOrMany>(text)? {
        OneOrMany::One(spec) => vec![*spec],
        OneOrMany::Many(specs) => specs,
    })
}

/// One CSV row per report, with one column per state label.
pub fn reports_to_csv(q: &IntervalRateOperator, reports: &[QueryReport]) -> String {
    let labels: Vec<String> = (0..q.size()).map(|x| q.space().label(x)).collect();
    let mut out = String::from("index,method,t,epsilon,m,iterations,error_bound,bound_kind,converged,true_error,wall_time_s");
    for label in &labels {
        write!(out, ",{}", csv_field(label)).expect("writing to a string");
    }
    out.push('\n');
    for r in reports {
        let method = serde_json::to_value(r.query.method).expect("serializable");
        let kind = serde_json::to_value(r.bound_kind).expect("serializable");
        let t = match r.query.t.finite() {
            Some(t) => t.to_string(),
            None => "infinity".into(),
        };
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.index,
            method.as_str().unwrap_or_default(),
            t,
            r.query.epsilon,
            r.query.m,
            r.iterations,
            r.error_bound,
            kind.as_str().unwrap_or_default(),
            r.converged,
            r.true_error.map(|e| e.to_string()).unwrap_or_default(),
            r.wall_time_s,
        )
        .expect("writing to a string");
        for label in &labels {
            write!(out, ",{}", r.result[label]).expect("writing to a string");
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary::BinaryModel;

    fn model() -> IntervalRateOperator {
        let q = BinaryModel::healthy_sick().to_operator();
        let labelled = crate::gamble::StateSpace::with_labels(vec!["healthy".into(), "sick".into()]).unwrap();
        IntervalRateOperator::new(
            labelled,
            vec![vec![0.0, q.lower(0, 1)], vec![q.lower(1, 0), 0.0]],
            vec![vec![0.0, q.upper(0, 1)], vec![q.upper(1, 0), 0.0]],
        )
        .unwrap()
    }

    fn sick() -> GambleSpec {
        GambleSpec::Indicator(vec!["sick".into()])
    }

    #[test]
    fn parses_one_or_many() {
        let one = r#"{"f": ["sick"], "t": 1, "epsilon": 1e-3, "method": "uniform"}"#;
        let specs = parse_queries(one).unwrap();
        assert_eq!(specs, vec![QuerySpec::new(sick(), Horizon::Finite(1.0), 1e-3, Method::Uniform)]);
        let many = r#"[{"f": {"sick": 1}, "t": "infinity", "epsilon": 1e-4, "method": "limit"},
                       {"f": ["sick"], "t": 0.5, "epsilon": 1e-3, "method": "uniform-ergodic", "m": 2}]"#;
        let specs = parse_queries(many).unwrap();
        assert_eq!(specs[0].t, Horizon::INFINITY);
        assert_eq!(specs[1].method, Method::UniformErgodic);
        assert!(parse_queries(r#"{"f": ["sick"], "t": "forever", "epsilon": 1, "method": "limit"}"#).is_err());
    }

    #[test]
    fn uniform_query_matches_table() {
        let spec = QuerySpec::new(sick(), Horizon::Finite(1.0), 1e-3, Method::Uniform);
        let r = run_query(&model(), &spec, 0, &RunConfig::default()).unwrap();
        assert_eq!(r.iterations, 8000);
        assert!((r.error_bound - 0.430e-3).abs() < 0.01e-3);
        assert!((r.true_error.unwrap() - 3.35e-5).abs() < 0.05e-5);
        assert_eq!(r.result.keys().collect::<Vec<_>>(), ["healthy", "sick"]);
    }

    #[test]
    fn zero_horizon_returns_f() {
        for method in [Method::Uniform, Method::Adaptive, Method::UniformErgodic] {
            let spec = QuerySpec::new(sick(), Horizon::Finite(0.0), 1e-3, method);
            let r = run_query(&model(), &spec, 0, &RunConfig::default()).unwrap();
            assert_eq!(r.iterations, 0);
            assert_eq!(r.result.values().copied().collect::<Vec<_>>(), [0.0, 1.0]);
        }
    }

    #[test]
    fn limit_query() {
        let spec = QuerySpec::new(sick(), Horizon::INFINITY, 1e-4, Method::Limit);
        let r = run_query(&model(), &spec, 0, &RunConfig::default()).unwrap();
        assert!((r.value.unwrap() - 1.0 / 105.0).abs() <= 1e-4);
        assert!(r.converged);
    }

    #[test]
    fn invalid_combinations() {
        let q = model();
        let mut spec = QuerySpec::new(sick(), Horizon::Finite(1.0), 1e-3, Method::Limit);
        assert_eq!(run_query(&q, &spec, 0, &RunConfig::default()).unwrap_err().exit_code(), 3);
        spec.method = Method::Uniform;
        spec.delta_override = Some(0.1);
        assert_eq!(run_query(&q, &spec, 0, &RunConfig::default()).unwrap_err().exit_code(), 3);
        let unknown = QuerySpec::new(GambleSpec::Indicator(vec!["dead".into()]), Horizon::Finite(1.0), 1e-3, Method::Uniform);
        assert_eq!(run_query(&q, &unknown, 0, &RunConfig::default()).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn non_ergodic_limit_is_a_computation_error() {
        let q = IntervalRateOperator::new(
            crate::gamble::StateSpace::with_labels(vec!["a".into(), "b".into()]).unwrap(),
            vec![vec![0.0; 2]; 2],
            vec![vec![0.0; 2]; 2],
        )
        .unwrap();
        let spec = QuerySpec::new(GambleSpec::Indicator(vec!["b".into()]), Horizon::INFINITY, 1e-3, Method::Limit);
        let err = run_query(&q, &spec, 0, &RunConfig::default()).unwrap_err();
        assert_eq!(err, QueryError::Computation(Error::NotErgodic));
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn batch_keeps_order_and_is_deterministic() {
        let q = model();
        let specs: Vec<QuerySpec> = [1e-2, 1e-3, 5e-3, 2e-3]
            .iter()
            .map(|&e| QuerySpec::new(sick(), Horizon::Finite(1.0), e, Method::Adaptive))
            .collect();
        let a = run_batch(&q, &specs, &RunConfig::default());
        let b = run_batch(&q, &specs, &RunConfig::default());
        for (i, (x, y)) in a.iter().zip(&b).enumerate() {
            let (x, y) = (x.as_ref().unwrap(), y.as_ref().unwrap());
            assert_eq!(x.index, i);
            assert_eq!(x.query.epsilon, specs[i].epsilon);
            assert_eq!((&x.result, x.iterations), (&y.result, y.iterations));
        }
    }

    #[test]
    fn csv_has_one_row_per_report() {
        let q = model();
        let spec = QuerySpec::new(sick(), Horizon::Finite(1.0), 1e-2, Method::Uniform);
        let r = run_query(&q, &spec, 0, &RunConfig::default()).unwrap();
        let csv = reports_to_csv(&q, &[r]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].ends_with(",healthy,sick"));
        assert!(lines[1].starts_with("0,uniform,1,0.01,1,"));
    }
}
