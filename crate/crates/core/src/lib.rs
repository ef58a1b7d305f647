//! Budgeted adversarial online learning.
//!
//! Each round a learner pulls `B` of `N` arms and pays the minimum of their
//! costs. This crate provides Follow the Perturbed Multiple Leaders and its
//! semi-bandit variant, greedy online submodular schedulers built on top of
//! it, an LP feasibility solver driven by it, the hindsight benchmarks used
//! to measure regret, cost environments, and a seeded experiment harness.

pub mod domain;
pub mod environments;
pub mod error;
pub mod harness;
pub mod hindsight;
pub mod lp;
pub mod osfm;
pub mod policies;

pub use domain::{ArmId, BetaParams, CostMatrix, CostVector, Selection, SimRng};
pub use error::{Error, Result};
