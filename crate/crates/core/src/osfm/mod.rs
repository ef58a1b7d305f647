//! Online submodular function maximization with unit-duration actions.
//!
//! A job scores a schedule in `[0, 1]`; each round the learner commits to a
//! schedule of `B` actions before the job is revealed. [`OnlineGreedy`] runs
//! one single-arm experts box per slot, [`OgHybrid`] runs perturbed-leader
//! boxes that each fill several slots.

mod greedy;
mod job;

pub use greedy::{theorem2_budget, BoxFeedback, ExpertsBox, HybridBox, HybridFeedback, OgHybrid, OnlineGreedy};
pub use job::{
    check_job_properties, job_eval, CoverageJob, FnJob, Job, JobProperty, JobView, MaxRewardJob,
    PropertyReport, Schedule,
};
