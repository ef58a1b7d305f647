use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::learner::{check_schedule, resolve_params, Learner, ResolvedParams, RoundInput};
use super::spec::{Benchmark, ExperimentSpec, FeedbackMode};
use crate::domain::{rng_from_seed, substream_seed, trial_seed, ArmId, CostMatrix, Selection};
use crate::environments::Environment;
use crate::error::{Error, Result};
use crate::hindsight::{best_fixed_schedule, best_fixed_subset, greedy_subset, top_k_arms};
use crate::osfm::{CoverageJob, Job};

const ENV_STREAM: u64 = 0;
const POLICY_STREAM: u64 = 1;

/// Full record of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: usize,
    pub seed: u64,
    /// Actions played each round, in the order the learner chose them.
    pub schedules: Vec<Vec<ArmId>>,
    /// Cost paid each round: the minimum over the schedule, or one minus
    /// the job value.
    pub incurred: Vec<f64>,
    /// Costs revealed to the learner; unobserved entries are `None`. Empty
    /// rows for job environments.
    pub feedback: Vec<Vec<Option<f64>>>,
    pub cumulative_cost: f64,
    /// Rounds where the perturbed leader left the selection, when defined.
    pub escapes: Option<usize>,
    /// Realized cost matrix, for cost environments.
    pub costs: Option<CostMatrix>,
    /// Per-metric values: `cost`, `mean_reward`, `escapes` and regrets.
    pub metrics: BTreeMap<String, f64>,
}

fn dedup_selection(schedule: &[ArmId], n_arms: usize) -> Result<Selection> {
    let mut arms: Vec<ArmId> = Vec::with_capacity(schedule.len());
    for &a in schedule {
        if !arms.contains(&a) {
            arms.push(a);
        }
    }
    Selection::new(arms, n_arms)
}

/// Runs trial `index` of `spec`. Deterministic in `(spec, index)`.
pub fn run_trial(spec: &ExperimentSpec, index: usize) -> Result<TrialResult> {
    let n_arms = spec.validate()?;
    let params = resolve_params(spec, n_arms)?;
    run_trial_resolved(spec, n_arms, &params, index)
}

fn run_trial_resolved(
    spec: &ExperimentSpec,
    n_arms: usize,
    params: &ResolvedParams,
    index: usize,
) -> Result<TrialResult> {
    let seed = trial_seed(spec.seed, index as u64);
    let mut env_rng = rng_from_seed(substream_seed(seed, ENV_STREAM));
    let mut rng = rng_from_seed(substream_seed(seed, POLICY_STREAM));
    let env = spec.env.build(spec.rounds, &mut env_rng)?;
    let feedback_mode = params.feedback.unwrap_or(FeedbackMode::Full);
    let mut learner = Learner::build(spec, n_arms, params, &mut rng)?;
    let t_max = spec.rounds;
    let mut schedules = Vec::with_capacity(t_max);
    let mut incurred = Vec::with_capacity(t_max);
    let mut feedback = Vec::with_capacity(t_max);
    let mut escapes: Option<usize> = None;
    let mut realized: Vec<Vec<f64>> = Vec::new();
    for t in 0..t_max {
        let schedule = learner.propose(&mut rng);
        check_schedule(&schedule, spec.budget, n_arms)?;
        let escaped = match &env {
            Environment::Oblivious(_) | Environment::Adaptive(_) => {
                let costs = match &env {
                    Environment::Oblivious(m) => m.cost_vector(t),
                    Environment::Adaptive(adv) => adv.respond(&dedup_selection(&schedule, n_arms)?)?,
                    Environment::Jobs(_) => unreachable!(),
                };
                let paid = schedule.iter().map(|a| costs.get(*a)).fold(f64::INFINITY, f64::min);
                incurred.push(paid);
                feedback.push(match feedback_mode {
                    FeedbackMode::Full => costs.values().iter().map(|c| Some(*c)).collect(),
                    FeedbackMode::Semi => {
                        let mut row = vec![None; n_arms];
                        for a in &schedule {
                            row[a.0] = Some(costs.get(*a));
                        }
                        row
                    }
                });
                let e = learner.learn(&schedule, RoundInput::Costs(&costs), feedback_mode, &mut rng)?;
                realized.push(costs.into_inner());
                e
            }
            Environment::Jobs(jobs) => {
                let job = &jobs[t];
                incurred.push(1.0 - job.value(&schedule));
                feedback.push(Vec::new());
                learner.learn(&schedule, RoundInput::Job(job), feedback_mode, &mut rng)?
            }
        };
        if let Some(e) = escaped {
            *escapes.get_or_insert(0) += e as usize;
        }
        schedules.push(schedule);
    }
    let cumulative_cost: f64 = incurred.iter().sum();
    let mut metrics = BTreeMap::new();
    metrics.insert("cost".to_string(), cumulative_cost);
    metrics.insert("mean_reward".to_string(), 1.0 - cumulative_cost / t_max as f64);
    if let Some(e) = escapes {
        metrics.insert("escapes".to_string(), e as f64);
    }
    let costs = match &env {
        Environment::Jobs(jobs) => {
            metrics.extend(compute_job_regrets(cumulative_cost, jobs, n_arms, spec.budget, &spec.benchmarks)?);
            None
        }
        _ => {
            let m = CostMatrix::from_rows(realized)?;
            metrics.extend(compute_regrets(cumulative_cost, &m, spec.budget, &spec.benchmarks)?);
            Some(m)
        }
    };
    Ok(TrialResult {
        index,
        seed,
        schedules,
        incurred,
        feedback,
        cumulative_cost,
        escapes,
        costs,
        metrics,
    })
}

/// Regret of a trial that paid `cost` against each benchmark on matrix `m`.
/// Reward benchmarks use `reward = T - cost`.
pub fn compute_regrets(
    cost: f64,
    m: &CostMatrix,
    budget: usize,
    benchmarks: &[Benchmark],
) -> Result<BTreeMap<String, f64>> {
    let t = m.n_rounds() as f64;
    let mut out = BTreeMap::new();
    for b in benchmarks {
        let value = match b {
            Benchmark::Single => cost - best_fixed_subset(m, 1)?.value,
            Benchmark::Bih(k) => cost - best_fixed_subset(m, k.unwrap_or(budget))?.value,
            Benchmark::Top => cost - top_k_arms(m, budget)?.value,
            Benchmark::Greedy => cost - greedy_subset(m, budget)?.value,
            Benchmark::Opt(k) => cost - best_fixed_subset(m, *k)?.value,
            Benchmark::OptApprox => {
                let opt = t - best_fixed_subset(m, budget)?.value;
                (1.0 - (-1.0f64).exp()) * opt - (t - cost)
            }
        };
        out.insert(b.metric(), value);
    }
    Ok(out)
}

/// Regret of a scheduler that paid `cost` on a job sequence.
pub fn compute_job_regrets(
    cost: f64,
    jobs: &[CoverageJob],
    n_arms: usize,
    budget: usize,
    benchmarks: &[Benchmark],
) -> Result<BTreeMap<String, f64>> {
    let refs: Vec<&dyn Job> = jobs.iter().map(|j| j as &dyn Job).collect();
    let reward = jobs.len() as f64 - cost;
    let opt = |k: usize| best_fixed_schedule(&refs, n_arms, k, false).map(|r| r.value);
    let mut out = BTreeMap::new();
    for b in benchmarks {
        let value = match b {
            Benchmark::Single => opt(1)? - reward,
            Benchmark::Bih(k) => opt(k.unwrap_or(budget))? - reward,
            Benchmark::Opt(k) => opt(*k)? - reward,
            Benchmark::OptApprox => (1.0 - (-1.0f64).exp()) * opt(budget)? - reward,
            Benchmark::Top | Benchmark::Greedy => {
                return Err(Error::Unsupported(format!("benchmark {b} needs a cost matrix")))
            }
        };
        out.insert(b.metric(), value);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    /// Sample standard deviation; 0 when there is a single trial.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub n_arms: usize,
    pub horizon: usize,
    pub params: ResolvedParams,
    pub trial_seeds: Vec<u64>,
    /// Set when `K = 1` and every std is reported as 0.
    pub single_trial: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub spec: ExperimentSpec,
    pub metadata: Metadata,
    pub metrics: BTreeMap<String, MetricStats>,
    /// Per-trial metric values, in trial order.
    pub trials: Vec<BTreeMap<String, f64>>,
}

/// Mean and sample standard deviation of each metric across trials.
pub fn summarize(trials: &[BTreeMap<String, f64>]) -> BTreeMap<String, MetricStats> {
    let mut out = BTreeMap::new();
    let k = trials.len();
    let Some(first) = trials.first() else {
        return out;
    };
    for name in first.keys() {
        let values: Vec<f64> = trials.iter().filter_map(|t| t.get(name).copied()).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let std = if k > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        out.insert(name.clone(), MetricStats { mean, std });
    }
    out
}

/// Summary plus the full trial records.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub summary: Summary,
    pub trials: Vec<TrialResult>,
}

/// Runs all `K` trials on a pool of `workers` threads (0 picks the
/// default). Results do not depend on the worker count. The first failing
/// trial by index aborts the run.
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<Experiment> {
    let n_arms = spec.validate()?;
    let params = resolve_params(spec, n_arms)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<TrialResult>> = pool.install(|| {
        (0..spec.trials)
            .into_par_iter()
            .map(|i| run_trial_resolved(spec, n_arms, &params, i))
            .collect()
    });
    let mut trials = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        trials.push(r.map_err(|e| Error::Trial {
            index,
            source: Box::new(e),
        })?);
    }
    let per_trial: Vec<BTreeMap<String, f64>> = trials.iter().map(|t| t.metrics.clone()).collect();
    let mut notes = Vec::new();
    if spec.env.is_adaptive() && spec.policy.is_randomized() {
        notes.push(format!(
            "randomized policy {} played against an adaptive adversary",
            spec.policy
        ));
    }
    let summary = Summary {
        spec: spec.clone(),
        metadata: Metadata {
            n_arms,
            horizon: spec.rounds,
            params,
            trial_seeds: trials.iter().map(|t| t.seed).collect(),
            single_trial: spec.trials == 1,
            notes,
        },
        metrics: summarize(&per_trial),
        trials: per_trial,
    };
    Ok(Experiment { summary, trials })
}
