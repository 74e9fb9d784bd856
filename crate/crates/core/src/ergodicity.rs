//! Ergodicity of interval rate operators, coefficient-of-ergodicity bounds,
//! ergodic error bounds and guaranteed approximation of limit values.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::approximation::{uniform_plan, validity_count, UniformPlan};
use crate::error::{Error, Result};
use crate::gamble::Gamble;
use crate::operator::IntervalRateOperator;
use crate::transition::{EulerPower, LowerTransition};

/// Largest state space for the subset scan of [`coefficient_bounds`].
pub const SUBSET_SCAN_CAP: usize = 20;

/// Default iteration cap of [`limit_approximate`].
pub const DEFAULT_MAX_ITERATIONS: u64 = 1_000_000_000;

/// Iterations between two progress callbacks.
pub const PROGRESS_INTERVAL: u64 = 1_000_000;

/// Width of the downward scan that follows the bisection in [`uniform_ergodic_plan`].
const PLAN_SCAN_WIDTH: u64 = 64;

/// Reflexive-transitive upper reachability; `reachable(y, x)` is `y ~> x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reachability {
    size: usize,
    reach: Vec<bool>,
}

impl Reachability {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn reachable(&self, from: usize, to: usize) -> bool {
        self.reach[from * self.size + to]
    }

    pub fn to_rows(&self) -> Vec<Vec<bool>> {
        self.reach.chunks(self.size).map(<[bool]>::to_vec).collect()
    }
}

/// Upper reachability: an edge `a -> b` exists when `[Q̄ I_b](a) > 0`.
pub fn upper_reachability(q: &IntervalRateOperator) -> Reachability {
    let n = q.size();
    let mut reach = vec![false; n * n];
    let mut adjacency = vec![Vec::new(); n];
    for b in 0..n {
        let image = q
            .apply_upper(&Gamble::indicator(n, &[b]).expect("in range"))
            .expect("sizes match");
        for a in (0..n).filter(|&a| a != b) {
            if image[a] > 0.0 {
                adjacency[a].push(b);
            }
        }
    }
    for start in 0..n {
        let mut stack = vec![start];
        reach[start * n + start] = true;
        while let Some(a) = stack.pop() {
            for &b in &adjacency[a] {
                if !reach[start * n + b] {
                    reach[start * n + b] = true;
                    stack.push(b);
                }
            }
        }
    }
    Reachability { size: n, reach }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErgodicityReport {
    /// States upper reachable from every state.
    pub top_class: Vec<usize>,
    pub regular: bool,
    pub absorbing: bool,
    pub ergodic: bool,
}

/// Decides ergodicity by checking that the operator is regularly absorbing.
pub fn check_ergodic(q: &IntervalRateOperator) -> ErgodicityReport {
    let n = q.size();
    let reach = upper_reachability(q);
    let top_class: Vec<usize> = (0..n)
        .filter(|&x| (0..n).all(|y| reach.reachable(y, x)))
        .collect();
    let regular = !top_class.is_empty();

    // B_{k+1} = B_k ∪ {y ∉ B_k : [Q I_{B_k}](y) > 0}, starting from the top class
    let mut set: BTreeSet<usize> = top_class.iter().copied().collect();
    if regular {
        loop {
            let members: Vec<usize> = set.iter().copied().collect();
            let image = q
                .apply_lower(&Gamble::indicator(n, &members).expect("in range"))
                .expect("sizes match");
            let added: Vec<usize> = (0..n).filter(|y| !set.contains(y) && image[*y] > 0.0).collect();
            if added.is_empty() {
                break;
            }
            set.extend(added);
        }
    }
    let absorbing = regular && set.len() == n;
    ErgodicityReport {
        top_class,
        regular,
        absorbing,
        ergodic: regular && absorbing,
    }
}

/// Lower and upper bounds on the coefficient of ergodicity of an operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientBounds {
    pub lower: f64,
    pub upper: f64,
    pub exact: Option<f64>,
}

impl CoefficientBounds {
    /// The tightest available upper estimate: exact if known, else `upper`.
    pub fn best(&self) -> f64 {
        self.exact.unwrap_or(self.upper)
    }
}

/// Scans every non-empty proper subset `A`:
/// `lower = max_A max_{x,y} [T I_A](x) - [T I_A](y)` and
/// `upper = max_A max_{x,y} [T̄ I_A](x) - [T I_A](y)`.
pub fn coefficient_bounds(op: &dyn LowerTransition) -> Result<CoefficientBounds> {
    let n = op.size();
    if n > SUBSET_SCAN_CAP {
        return Err(Error::SizeLimit {
            size: n,
            cap: SUBSET_SCAN_CAP,
        });
    }
    let full = (1u32 << n) - 1;
    let mut indicator = vec![0.0; n];
    let mut lower: f64 = 0.0;
    let mut upper: f64 = 0.0;
    // Gray-code order: consecutive subsets differ in a single state.
    let mut previous = 0u32;
    for i in 1..(1u32 << n) {
        let subset = i ^ (i >> 1);
        let flipped = (subset ^ previous).trailing_zeros() as usize;
        indicator[flipped] = 1.0 - indicator[flipped];
        previous = subset;
        if subset == full {
            continue;
        }
        let f = Gamble::new(indicator.clone())?;
        let low = op.apply_lower(&f)?;
        let high = op.apply_upper(&f)?;
        lower = lower.max(low.variation());
        upper = upper.max(high.max() - low.min());
    }
    let exact = op.exact_coefficient();
    if n == 1 {
        // no proper non-empty subset: every image is constant
        return Ok(CoefficientBounds {
            lower: 0.0,
            upper: 0.0,
            exact: Some(0.0),
        });
    }
    Ok(CoefficientBounds { lower, upper, exact })
}

/// Contraction factor `β` of `(I + delta Q)^m`: exact when available, else
/// the subset-scan upper bound.
pub fn contraction_factor(q: &IntervalRateOperator, delta: f64, m: u64) -> Result<f64> {
    let op = EulerPower::new(q, delta, m)?;
    if let Some(exact) = op.exact_coefficient() {
        return Ok(exact);
    }
    Ok(coefficient_bounds(&op)?.upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgodicErrorBound {
    pub epsilon_e: f64,
    pub epsilon_d: f64,
    pub beta: f64,
}

fn ergodic_terms(q: &IntervalRateOperator, f: &Gamble, delta: f64, m: u64, beta: f64, n: u64) -> (f64, f64) {
    let norm = q.norm();
    let k = n.div_ceil(m);
    let scale = m as f64 * delta * delta * norm * norm * f.centred();
    let epsilon_d = scale / (1.0 - beta);
    let epsilon_e = scale * (1.0 - beta.powf(k as f64)) / (1.0 - beta);
    (epsilon_e, epsilon_d)
}

/// A priori error bounds for the uniform approximation with `n` steps of
/// size `delta`, valid when `(I + delta Q)^m` is a strict contraction.
pub fn ergodic_error_bound(
    q: &IntervalRateOperator,
    f: &Gamble,
    delta: f64,
    m: u64,
    n: u64,
) -> Result<ErgodicErrorBound> {
    f.check_len(q.size())?;
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let beta = contraction_factor(q, delta, m)?;
    if beta >= 1.0 {
        return Err(Error::Inapplicable(format!(
            "coefficient of ergodicity estimate {beta} is not below 1"
        )));
    }
    let (epsilon_e, epsilon_d) = ergodic_terms(q, f, delta, m, beta, n);
    Ok(ErgodicErrorBound {
        epsilon_e,
        epsilon_d,
        beta,
    })
}

/// Smallest step count found for which the ergodic a priori bound meets `epsilon`.
///
/// The search bisects between the step-validity count and the uniform count,
/// then scans up to 64 smaller counts. If the uniform count itself does not
/// qualify, the uniform plan is returned unchanged.
pub fn uniform_ergodic_plan(
    q: &IntervalRateOperator,
    f: &Gamble,
    t: f64,
    epsilon: f64,
    m: u64,
) -> Result<UniformPlan> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let uniform = uniform_plan(q, f, t, epsilon)?;
    if uniform.n == 0 {
        return Ok(uniform);
    }
    if !check_ergodic(q).ergodic {
        return Err(Error::NotErgodic);
    }
    let norm = q.norm();
    let qualifies = |n: u64| -> Result<Option<bool>> {
        let delta = t / n as f64;
        let beta = contraction_factor(q, delta, m)?;
        if beta >= 1.0 {
            return Ok(None);
        }
        let k = n.div_ceil(m);
        let lhs = m as f64 * delta * delta * norm * norm * f.centred() * (1.0 - beta.powf(k as f64));
        Ok(Some(lhs <= (1.0 - beta) * epsilon))
    };
    let passes = |n: u64| -> Result<bool> { Ok(qualifies(n)? == Some(true)) };

    match qualifies(uniform.n)? {
        None => {
            return Err(Error::Inapplicable(
                "no coefficient of ergodicity estimate below 1 at the uniform step size".into(),
            ))
        }
        Some(false) => return Ok(uniform),
        Some(true) => {}
    }

    let floor = validity_count(t, norm).max(1);
    let mut best = uniform.n;
    if passes(floor)? {
        best = floor;
    } else {
        let (mut lo, mut hi) = (floor, uniform.n);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if passes(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        best = best.min(hi);
        let stop = best.saturating_sub(PLAN_SCAN_WIDTH).max(floor);
        for n in (stop..best).rev() {
            if passes(n)? {
                best = n;
            }
        }
    }
    Ok(UniformPlan {
        n: best,
        delta: t / best as f64,
        target_epsilon: epsilon,
    })
}

/// How the limit method chooses its step size and error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LimitStrategy {
    /// Pick a large `delta` whose ergodic bound is at most `epsilon / 2`, then
    /// iterate until `||g||_c <= epsilon / 2`.
    AprioriDelta { m: u64 },
    /// Use the given step, accumulate the running bound `ε'`, and stop at the
    /// first `i` with `||g_i||_c <= ε'`; the guaranteed error is `2 ε'`.
    RunningBound { delta: f64 },
}

#[derive(Clone, Copy)]
pub struct LimitOptions<'a> {
    pub max_iterations: u64,
    /// Called every [`PROGRESS_INTERVAL`] iterations with the iteration count
    /// and the current centred norm.
    pub progress: Option<&'a (dyn Fn(u64, f64) + Sync)>,
}

impl Default for LimitOptions<'_> {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            progress: None,
        }
    }
}

impl std::fmt::Debug for LimitOptions<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LimitOptions")
            .field("max_iterations", &self.max_iterations)
            .field("progress", &self.progress.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitResult {
    /// Midpoint `(max g + min g) / 2` of the final iterate.
    pub value: f64,
    pub guaranteed_error: f64,
    pub iterations: u64,
    pub converged: bool,
    /// Step size used.
    pub delta: f64,
}

/// Largest step found with `2 m δ² ||Q||² ||f||_c <= (1 - β(δ)) ε`.
fn apriori_step(q: &IntervalRateOperator, f: &Gamble, epsilon: f64, m: u64) -> Result<f64> {
    let norm = q.norm();
    let scale = 2.0 * m as f64 * norm * norm * f.centred();
    let passes = |delta: f64| -> Result<bool> {
        let beta = contraction_factor(q, delta, m)?;
        Ok(beta < 1.0 && scale * delta * delta <= (1.0 - beta) * epsilon)
    };
    let mut delta = 2.0 / norm;
    if passes(delta)? {
        return Ok(delta);
    }
    let mut failing = delta;
    let mut found = None;
    for _ in 0..1100 {
        delta /= 2.0;
        if delta == 0.0 {
            break;
        }
        if passes(delta)? {
            found = Some(delta);
            break;
        }
        failing = delta;
    }
    let Some(mut passing) = found else {
        return Err(Error::Inapplicable(
            "no step size yields a coefficient of ergodicity estimate small enough".into(),
        ));
    };
    for _ in 0..60 {
        let mid = 0.5 * (passing + failing);
        if mid <= passing || mid >= failing {
            break;
        }
        if passes(mid)? {
            passing = mid;
        } else {
            failing = mid;
        }
    }
    Ok(passing)
}

/// Approximates the constant `lim_{t -> inf} T_t f` of an ergodic operator.
pub fn limit_approximate(
    q: &IntervalRateOperator,
    f: &Gamble,
    epsilon: f64,
    strategy: LimitStrategy,
    opts: &LimitOptions<'_>,
) -> Result<LimitResult> {
    f.check_len(q.size())?;
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be finite and > 0, got {epsilon}"
        )));
    }
    if !check_ergodic(q).ergodic {
        return Err(Error::NotErgodic);
    }
    if f.is_constant() {
        return Ok(LimitResult {
            value: f.midpoint(),
            guaranteed_error: 0.0,
            iterations: 0,
            converged: true,
            delta: 0.0,
        });
    }
    let norm = q.norm();
    let mut g = f.values().to_vec();
    let mut next = vec![0.0; g.len()];
    let mut iterations = 0u64;

    let report = |i: u64, c: f64| {
        if let Some(cb) = opts.progress {
            if i.is_multiple_of(PROGRESS_INTERVAL) {
                cb(i, c);
            }
        }
    };
    let midpoint = |v: &[f64]| Gamble::from_vec_unchecked(v.to_vec()).midpoint();

    match strategy {
        LimitStrategy::AprioriDelta { m } => {
            if m == 0 {
                return Err(Error::InvalidArgument("m must be at least 1".into()));
            }
            let delta = apriori_step(q, f, epsilon, m)?;
            let beta = contraction_factor(q, delta, m)?;
            let (_, epsilon_d) = ergodic_terms(q, f, delta, m, beta, 1);
            let half = epsilon / 2.0;
            let mut c = f.centred();
            while c > half {
                if iterations >= opts.max_iterations {
                    return Ok(LimitResult {
                        value: midpoint(&g),
                        guaranteed_error: epsilon_d + c,
                        iterations,
                        converged: false,
                        delta,
                    });
                }
                q.step_into(delta, &g, &mut next);
                std::mem::swap(&mut g, &mut next);
                iterations += 1;
                c = centred(&g);
                report(iterations, c);
            }
            Ok(LimitResult {
                value: midpoint(&g),
                guaranteed_error: epsilon,
                iterations,
                converged: true,
                delta,
            })
        }
        LimitStrategy::RunningBound { delta } => {
            q.check_step(delta)?;
            if delta == 0.0 {
                return Err(Error::InvalidArgument("step size must be positive".into()));
            }
            let weight = delta * delta * norm * norm;
            let mut eps = 0.0;
            let mut c = f.centred();
            while c > eps {
                if iterations >= opts.max_iterations {
                    return Ok(LimitResult {
                        value: midpoint(&g),
                        guaranteed_error: eps + c,
                        iterations,
                        converged: false,
                        delta,
                    });
                }
                eps += weight * c;
                q.step_into(delta, &g, &mut next);
                std::mem::swap(&mut g, &mut next);
                iterations += 1;
                c = centred(&g);
                report(iterations, c);
            }
            let guaranteed_error = 2.0 * eps;
            Ok(LimitResult {
                value: midpoint(&g),
                guaranteed_error,
                iterations,
                converged: guaranteed_error <= epsilon,
                delta,
            })
        }
    }
}

#[inline]
fn centred(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    (hi - lo) / 2.0
}
