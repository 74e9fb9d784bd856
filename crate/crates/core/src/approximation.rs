//! Euler-grid approximations of `T_t f` with a guaranteed error bound.
//!
//! Both methods iterate `g <- g + delta Q g`. The uniform method uses one
//! step size fixed up front; the adaptive method re-evaluates the step size
//! every `m` iterations from the current centred norm, which can only shrink.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamble::Gamble;
use crate::operator::IntervalRateOperator;

/// Relative distance to an integer below which a ratio is snapped before `ceil`.
pub const CEIL_SNAP_TOLERANCE: f64 = 1e-9;

/// Relative snap tolerance for the step-validity count `t ||Q|| / 2`. It is
/// tight enough that the snapped step still passes the `delta ||Q|| <= 2` check.
const VALIDITY_SNAP_TOLERANCE: f64 = 4e-13;

/// `ceil(x)`, except that values within `rel_tol` (relative) of an integer
/// snap to that integer.
pub fn snapped_ceil(x: f64, rel_tol: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= rel_tol * x.abs() {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// Smallest step count `n` with `t ||Q|| / n <= 2`.
pub(crate) fn validity_count(t: f64, norm: f64) -> u64 {
    snapped_ceil(t * norm / 2.0, VALIDITY_SNAP_TOLERANCE)
}

/// Iteration count and step size of the uniform method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformPlan {
    pub n: u64,
    pub delta: f64,
    pub target_epsilon: f64,
}

/// Outcome of a grid approximation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxTrace {
    /// The approximation of `T_t f`.
    pub result: Gamble,
    /// Guaranteed upper bound on `||T_t f - result||`.
    pub epsilon_prime: f64,
    /// Whether `epsilon_prime` is the tight running bound; otherwise it is the
    /// a priori bound that needs no per-step norms.
    pub bound_tracked: bool,
    pub total_iterations: u64,
    /// Blocks of `(delta_i, k_i)`: `k_i` consecutive steps of size `delta_i`.
    pub steps: Vec<(f64, u64)>,
    pub stopped_early: bool,
}

impl ApproxTrace {
    fn unchanged(f: &Gamble) -> Self {
        Self {
            result: f.clone(),
            epsilon_prime: 0.0,
            bound_tracked: true,
            total_iterations: 0,
            steps: Vec::new(),
            stopped_early: false,
        }
    }

    /// Step sizes in application order, one entry per iteration.
    pub fn step_sequence(&self) -> Vec<f64> {
        self.steps
            .iter()
            .flat_map(|&(d, k)| std::iter::repeat_n(d, k as usize))
            .collect()
    }
}

/// Knobs shared by both grid methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxOptions {
    /// Accumulate the tight per-iteration error bound.
    pub track_bound: bool,
    /// Stop as soon as the remaining-cost criterion certifies the target error.
    /// Implies bound tracking.
    pub early_stop: bool,
    /// Adaptive method only: use `k_i ||g_(i-1,m)||_c` per block instead of the
    /// per-iteration sum.
    pub loose_adaptive_bound: bool,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self {
            track_bound: true,
            early_stop: false,
            loose_adaptive_bound: false,
        }
    }
}

impl ApproxOptions {
    pub fn tracking(track_bound: bool) -> Self {
        Self {
            track_bound,
            ..Self::default()
        }
    }
}

fn check_inputs(q: &IntervalRateOperator, f: &Gamble, t: f64, epsilon: f64) -> Result<()> {
    f.check_len(q.size())?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be finite and > 0, got {epsilon}"
        )));
    }
    Ok(())
}

fn trivial(q: &IntervalRateOperator, f: &Gamble, t: f64) -> bool {
    f.centred() == 0.0 || q.norm() == 0.0 || t == 0.0
}

pub fn uniform_plan(q: &IntervalRateOperator, f: &Gamble, t: f64, epsilon: f64) -> Result<UniformPlan> {
    check_inputs(q, f, t, epsilon)?;
    if trivial(q, f, t) {
        return Ok(UniformPlan {
            n: 0,
            delta: 0.0,
            target_epsilon: epsilon,
        });
    }
    let norm = q.norm();
    let accuracy = t * t * norm * norm * f.centred() / epsilon;
    if !accuracy.is_finite() {
        return Err(Error::InvalidArgument("iteration count overflows".into()));
    }
    let n = validity_count(t, norm).max(snapped_ceil(accuracy, CEIL_SNAP_TOLERANCE)).max(1);
    Ok(UniformPlan {
        n,
        delta: t / n as f64,
        target_epsilon: epsilon,
    })
}

/// True iff `||g||_v <= epsilon - epsilon_so_far`, in which case stopping now
/// keeps the error at the full horizon within `epsilon`.
pub fn remaining_cost_stop(epsilon: f64, epsilon_so_far: f64, g: &Gamble) -> bool {
    can_stop(epsilon, epsilon_so_far, g.values())
}

#[inline]
fn centred(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    (hi - lo) / 2.0
}

#[inline]
fn variation(v: &[f64]) -> f64 {
    2.0 * centred(v)
}

#[inline]
fn can_stop(epsilon: f64, epsilon_so_far: f64, g: &[f64]) -> bool {
    epsilon_so_far <= epsilon && variation(g) <= epsilon - epsilon_so_far
}

/// Runs the uniform method for a given plan.
pub fn run_uniform_plan(
    q: &IntervalRateOperator,
    f: &Gamble,
    plan: &UniformPlan,
    opts: &ApproxOptions,
) -> Result<ApproxTrace> {
    f.check_len(q.size())?;
    if plan.n == 0 {
        return Ok(ApproxTrace::unchanged(f));
    }
    q.check_step(plan.delta)?;
    let norm = q.norm();
    let weight = plan.delta * plan.delta * norm * norm;
    let track = opts.track_bound || opts.early_stop;

    let mut g = f.values().to_vec();
    let mut next = vec![0.0; g.len()];
    let mut eps = 0.0;
    let mut done = 0;
    let mut stopped_early = false;
    for _ in 0..plan.n {
        if track {
            eps += weight * centred(&g);
        }
        q.step_into(plan.delta, &g, &mut next);
        std::mem::swap(&mut g, &mut next);
        done += 1;
        if opts.early_stop && done < plan.n && can_stop(plan.target_epsilon, eps, &g) {
            eps += variation(&g);
            stopped_early = true;
            break;
        }
    }
    let epsilon_prime = if track {
        eps
    } else {
        // ||g_i||_c <= ||f||_c for every i
        weight * plan.n as f64 * f.centred()
    };
    Ok(ApproxTrace {
        result: Gamble::from_vec_unchecked(g),
        epsilon_prime,
        bound_tracked: track,
        total_iterations: done,
        steps: vec![(plan.delta, done)],
        stopped_early,
    })
}

/// Uniform approximation of `T_t f` to within `epsilon`.
pub fn uniform_approximate(
    q: &IntervalRateOperator,
    f: &Gamble,
    t: f64,
    epsilon: f64,
    opts: &ApproxOptions,
) -> Result<ApproxTrace> {
    let plan = uniform_plan(q, f, t, epsilon)?;
    run_uniform_plan(q, f, &plan, opts)
}

/// Adaptive `m`-fold approximation of `T_t f` to within `epsilon`.
pub fn adaptive_approximate(
    q: &IntervalRateOperator,
    f: &Gamble,
    t: f64,
    epsilon: f64,
    m: u64,
    opts: &ApproxOptions,
) -> Result<ApproxTrace> {
    check_inputs(q, f, t, epsilon)?;
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if trivial(q, f, t) {
        return Ok(ApproxTrace::unchanged(f));
    }
    let norm = q.norm();
    let norm_sq = norm * norm;
    let max_step = 2.0 / norm;
    let tight = opts.track_bound && !opts.loose_adaptive_bound;

    let mut g = f.values().to_vec();
    let mut next = vec![0.0; g.len()];
    let mut remaining = t;
    let mut eps = 0.0;
    let mut steps = Vec::new();
    let mut total = 0;
    let mut stopped_early = false;
    let mut block_centred = centred(&g);

    while remaining > 0.0 && block_centred > 0.0 {
        let mut delta = remaining.min(max_step).min(epsilon / (t * norm_sq * block_centred));
        let k;
        if m as f64 * delta > remaining {
            let mut count = snapped_ceil(remaining / delta, CEIL_SNAP_TOLERANCE).max(1);
            if remaining / count as f64 > max_step {
                count += 1;
            }
            k = count;
            delta = remaining / k as f64;
            remaining = 0.0;
        } else {
            k = m;
            remaining -= k as f64 * delta;
        }
        let weight = delta * delta * norm_sq;
        if tight {
            for _ in 0..k {
                eps += weight * centred(&g);
                q.step_into(delta, &g, &mut next);
                std::mem::swap(&mut g, &mut next);
            }
        } else {
            eps += weight * k as f64 * block_centred;
            for _ in 0..k {
                q.step_into(delta, &g, &mut next);
                std::mem::swap(&mut g, &mut next);
            }
        }
        total += k;
        steps.push((delta, k));
        block_centred = centred(&g);

        if opts.early_stop && remaining > 0.0 && can_stop(epsilon, eps, &g) {
            eps += 2.0 * block_centred;
            stopped_early = true;
            break;
        }
    }

    Ok(ApproxTrace {
        result: Gamble::from_vec_unchecked(g),
        epsilon_prime: eps,
        bound_tracked: tight,
        total_iterations: total,
        steps,
        stopped_early,
    })
}

/// Applies `(I + delta_k Q) ... (I + delta_1 Q)` to `f`, `delta_1` first.
pub fn compose_steps(q: &IntervalRateOperator, f: &Gamble, steps: &[f64]) -> Result<Gamble> {
    f.check_len(q.size())?;
    for &d in steps {
        q.check_step(d)?;
    }
    let mut g = f.values().to_vec();
    let mut next = vec![0.0; g.len()];
    for &d in steps {
        q.step_into(d, &g, &mut next);
        std::mem::swap(&mut g, &mut next);
    }
    Ok(Gamble::from_vec_unchecked(g))
}
