//! Closed-form results for two-state models.
//!
//! A two-state operator is described by the rate intervals `[q0_low, q0_high]`
//! (from state 0 to state 1) and `[q1_low, q1_high]` (from 1 to 0). Its
//! transient solution, limit and contraction coefficient are known exactly,
//! which makes it the reference against which approximations are checked.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamble::{Gamble, StateSpace};
use crate::operator::{IntervalRateOperator, STEP_SLACK};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryModel {
    pub q0_low: f64,
    pub q0_high: f64,
    pub q1_low: f64,
    pub q1_high: f64,
}

impl BinaryModel {
    pub fn new(q0_low: f64, q0_high: f64, q1_low: f64, q1_high: f64) -> Result<Self> {
        for (name, lo, hi) in [("q0", q0_low, q0_high), ("q1", q1_low, q1_high)] {
            if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || lo > hi {
                return Err(Error::InvalidOperator(format!(
                    "{name} interval [{lo}, {hi}] must satisfy 0 <= low <= high < inf"
                )));
            }
        }
        Ok(Self {
            q0_low,
            q0_high,
            q1_low,
            q1_high,
        })
    }

    /// The healthy/sick model: `q0 in [1/52, 3/52]`, `q1 in [1/2, 2]`.
    pub fn healthy_sick() -> Self {
        Self {
            q0_low: 1.0 / 52.0,
            q0_high: 3.0 / 52.0,
            q1_low: 1.0 / 2.0,
            q1_high: 2.0,
        }
    }

    /// Reads the rate intervals off a two-state interval operator.
    pub fn from_operator(q: &IntervalRateOperator) -> Option<Self> {
        (q.size() == 2).then(|| Self {
            q0_low: q.lower(0, 1),
            q0_high: q.upper(0, 1),
            q1_low: q.lower(1, 0),
            q1_high: q.upper(1, 0),
        })
    }

    pub fn to_operator(&self) -> IntervalRateOperator {
        IntervalRateOperator::new(
            StateSpace::new(2).expect("two states"),
            vec![vec![0.0, self.q0_low], vec![self.q1_low, 0.0]],
            vec![vec![0.0, self.q0_high], vec![self.q1_high, 0.0]],
        )
        .expect("validated on construction")
    }

    pub fn norm(&self) -> f64 {
        2.0 * self.q0_high.max(self.q1_high)
    }

    /// Rate sum governing the ordering `f(0) <= f(1)`.
    fn increasing_rate(&self) -> f64 {
        self.q0_low + self.q1_high
    }

    /// Rate sum governing the ordering `f(0) >= f(1)`.
    fn decreasing_rate(&self) -> f64 {
        self.q0_high + self.q1_low
    }
}

fn check_binary(f: &Gamble) -> Result<()> {
    f.check_len(2)
}

/// Exact lower expectation `T_t f` for a two-state model.
///
/// When the governing rate sum is zero the operator leaves `f` untouched and
/// `f` itself is returned.
pub fn analytic_transient(model: &BinaryModel, f: &Gamble, t: f64) -> Result<Gamble> {
    check_binary(f)?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    let (f0, f1) = (f[0], f[1]);
    if f0 == f1 || t == 0.0 {
        return Ok(f.clone());
    }
    let variation = (f1 - f0).abs();
    let out = if f0 < f1 {
        let rate = model.increasing_rate();
        if rate == 0.0 {
            return Ok(f.clone());
        }
        let h = variation / rate * -(-t * rate).exp_m1();
        vec![f0 + model.q0_low * h, f1 - model.q1_high * h]
    } else {
        let rate = model.decreasing_rate();
        if rate == 0.0 {
            return Ok(f.clone());
        }
        let h = variation / rate * -(-t * rate).exp_m1();
        vec![f0 - model.q0_high * h, f1 + model.q1_low * h]
    };
    Gamble::new(out)
}

/// The constant value of `lim_{t -> inf} T_t f`.
pub fn analytic_limit(model: &BinaryModel, f: &Gamble) -> Result<f64> {
    check_binary(f)?;
    let (f0, f1) = (f[0], f[1]);
    if f0 == f1 {
        return Ok(f0);
    }
    let variation = (f1 - f0).abs();
    if f0 < f1 {
        let rate = model.increasing_rate();
        if rate == 0.0 {
            return Err(Error::Inapplicable(
                "q0_low + q1_high = 0: no constant limit for increasing gambles".into(),
            ));
        }
        Ok(f0 + model.q0_low * variation / rate)
    } else {
        let rate = model.decreasing_rate();
        if rate == 0.0 {
            return Err(Error::Inapplicable(
                "q0_high + q1_low = 0: no constant limit for decreasing gambles".into(),
            ));
        }
        Ok(f1 + model.q1_low * variation / rate)
    }
}

/// Exact coefficient of ergodicity of the one-step operator `I + delta Q`.
pub fn binary_coefficient(model: &BinaryModel, delta: f64) -> Result<f64> {
    let norm = model.norm();
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "step size must be finite and non-negative, got {delta}"
        )));
    }
    if delta * norm > 2.0 + STEP_SLACK {
        return Err(Error::StepTooLarge {
            delta,
            norm,
            bound: 2.0 / norm,
        });
    }
    Ok((1.0 - delta * model.decreasing_rate())
        .abs()
        .max((1.0 - delta * model.increasing_rate()).abs()))
}
