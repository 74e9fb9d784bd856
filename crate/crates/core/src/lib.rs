//! Guaranteed numerical bounds for imprecise continuous-time Markov chains.
//!
//! An interval rate operator bounds every off-diagonal transition rate by an
//! interval. Its lower expectation `T_t f` solves a non-linear differential
//! equation that is approximated here by Euler steps `(I + delta Q)` with
//! rigorous, computable error bounds.

pub mod approximation;
pub mod binary;
pub mod ergodicity;
pub mod error;
pub mod gamble;
pub mod harness;
pub mod operator;
pub mod transition;

pub use approximation::{
    adaptive_approximate, compose_steps, remaining_cost_stop, run_uniform_plan, uniform_approximate, uniform_plan,
    ApproxOptions, ApproxTrace, UniformPlan,
};
pub use binary::{analytic_limit, analytic_transient, binary_coefficient, BinaryModel};
pub use ergodicity::{
    check_ergodic, coefficient_bounds, ergodic_error_bound, limit_approximate, uniform_ergodic_plan,
    upper_reachability, CoefficientBounds, ErgodicErrorBound, ErgodicityReport, LimitOptions, LimitResult,
    LimitStrategy,
};
pub use error::{Error, Result};
pub use gamble::{gamble_norms, Gamble, GambleNorms, StateSpace};
pub use operator::{IntervalRateOperator, RateMatrix};
pub use transition::{delta_coefficient, EulerPower, LowerTransition, StepComposition, StochasticMatrix};
