//! Regret-minimizing selection policies.
//!
//! [`Fpml`] is the full-feedback perturbed-leader policy (its zero-noise
//! leaders give follow-the-multiple-leaders), [`FpmlPartial`] wraps it for
//! semi-bandit feedback, and [`Hedge`] / [`Exp3`] are the single-arm experts
//! used inside the greedy schedulers.

mod experts;
mod fpml;
mod params;
mod partial;

pub use experts::{Exp3, Hedge};
pub(crate) use experts::sample_distinct;
pub use fpml::{escape_event, Fpml};
pub use params::{
    default_exp3_gamma, default_hedge_rate, resampling_cap, resampling_epsilon,
    theoretical_epsilon_full, theoretical_epsilon_partial, theoretical_regret_bound_full,
};
pub use partial::{geometric_resample_count, EstimatedCostVector, FpmlPartial};
