use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::spec::{ExperimentSpec, FeedbackMode, NoiseMode, PolicySpec, Setting};
use crate::domain::{ArmId, CostVector, Selection};
use crate::error::{Error, Result};
use crate::osfm::{Job, JobView, MaxRewardJob, OgHybrid, OnlineGreedy, Schedule};
use crate::policies::{
    default_exp3_gamma, default_hedge_rate, escape_event, resampling_cap, sample_distinct,
    theoretical_epsilon_full, theoretical_epsilon_partial, Exp3, Fpml, FpmlPartial, Hedge,
};
use crate::SimRng;

/// Parameter values actually used after resolving `auto` settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub feedback: Option<FeedbackMode>,
    pub epsilon: Option<f64>,
    pub resample_cap: Option<u32>,
    pub learning_rate: Option<f64>,
    pub gamma: Option<f64>,
}

/// Resolves `auto` settings from the horizon, arm count and budget.
pub fn resolve_params(spec: &ExperimentSpec, n_arms: usize) -> Result<ResolvedParams> {
    let t = spec.rounds;
    let feedback = spec.feedback_mode();
    let mut r = ResolvedParams {
        feedback: Some(feedback),
        ..Default::default()
    };
    let cap = |b: usize| -> Result<u32> {
        match spec.resample_cap {
            Setting::Fixed(c) => Ok(c),
            Setting::Auto => resampling_cap(n_arms, t, b),
        }
    };
    let eps_full = |b: usize| -> Result<f64> {
        match spec.epsilon {
            Setting::Fixed(e) => Ok(e),
            Setting::Auto => theoretical_epsilon_full(t, n_arms, b),
        }
    };
    let eps_partial = |b: usize, m: u32| -> Result<f64> {
        match spec.epsilon {
            Setting::Fixed(e) => Ok(e),
            Setting::Auto => theoretical_epsilon_partial(t, n_arms, b, m as f64),
        }
    };
    let hedge_rate = spec.learning_rate.fixed().unwrap_or_else(|| default_hedge_rate(n_arms, t));
    let gamma = spec.gamma.fixed().unwrap_or_else(|| default_exp3_gamma(n_arms, t));
    let exp3_rate = spec.learning_rate.fixed().unwrap_or(gamma / n_arms as f64);
    match spec.policy {
        PolicySpec::Fpml => r.epsilon = Some(eps_full(spec.budget)?),
        PolicySpec::FpmlPartial => {
            let m = cap(spec.budget)?;
            r.resample_cap = Some(m);
            r.epsilon = Some(eps_partial(spec.budget, m)?);
        }
        PolicySpec::OgHybrid { box_budget } => match feedback {
            FeedbackMode::Full => r.epsilon = Some(eps_full(box_budget)?),
            FeedbackMode::Semi => {
                let m = cap(box_budget)?;
                r.resample_cap = Some(m);
                r.epsilon = Some(eps_partial(box_budget, m)?);
            }
        },
        PolicySpec::Hedge => r.learning_rate = Some(hedge_rate),
        PolicySpec::Exp3 => {
            r.gamma = Some(gamma);
            r.learning_rate = Some(exp3_rate);
        }
        PolicySpec::Og => match feedback {
            FeedbackMode::Full => r.learning_rate = Some(hedge_rate),
            FeedbackMode::Semi => {
                r.gamma = Some(gamma);
                r.learning_rate = Some(exp3_rate);
            }
        },
        PolicySpec::Ftml | PolicySpec::UniformRandom => {}
    }
    Ok(r)
}

/// One round's revealed data.
pub enum RoundInput<'a> {
    Costs(&'a CostVector),
    Job(&'a dyn Job),
}

/// A learner instance owned by one trial.
#[derive(Debug, Clone)]
pub enum Learner {
    Fpml { state: Fpml, last_noise: Vec<f64> },
    Ftml(Fpml),
    FpmlPartial(FpmlPartial),
    Hedge { state: Hedge, budget: usize },
    Exp3 { state: Exp3, budget: usize },
    Og(OnlineGreedy),
    OgHybrid(OgHybrid),
    Uniform { n_arms: usize, budget: usize },
}

impl Learner {
    pub fn build(spec: &ExperimentSpec, n_arms: usize, params: &ResolvedParams, rng: &mut SimRng) -> Result<Self> {
        let b = spec.budget;
        let eps = || params.epsilon.ok_or_else(|| Error::param("epsilon was not resolved"));
        let cap = || params.resample_cap.ok_or_else(|| Error::param("resampling cap was not resolved"));
        let rate = || params.learning_rate.ok_or_else(|| Error::param("learning rate was not resolved"));
        let gamma = || params.gamma.ok_or_else(|| Error::param("gamma was not resolved"));
        let fpml = |budget: usize, eps: f64, rng: &mut SimRng| match spec.noise {
            NoiseMode::Fresh => Fpml::new(n_arms, budget, eps),
            NoiseMode::Frozen => Fpml::with_frozen_noise(n_arms, budget, eps, rng),
        };
        Ok(match spec.policy {
            PolicySpec::Fpml => Learner::Fpml {
                state: fpml(b, eps()?, rng)?,
                last_noise: Vec::new(),
            },
            PolicySpec::Ftml => Learner::Ftml(Fpml::new(n_arms, b, 1.0)?),
            PolicySpec::FpmlPartial => Learner::FpmlPartial(FpmlPartial::new(fpml(b, eps()?, rng)?, cap()?)?),
            PolicySpec::Hedge => Learner::Hedge {
                state: Hedge::new(n_arms, rate()?)?,
                budget: b,
            },
            PolicySpec::Exp3 => Learner::Exp3 {
                state: Exp3::new(n_arms, gamma()?, rate()?)?,
                budget: b,
            },
            PolicySpec::Og => Learner::Og(match params.feedback {
                Some(FeedbackMode::Semi) => OnlineGreedy::with_exp3(n_arms, b, gamma()?, rate()?)?,
                _ => OnlineGreedy::with_hedge(n_arms, b, rate()?)?,
            }),
            PolicySpec::OgHybrid { box_budget } => Learner::OgHybrid(match params.feedback {
                Some(FeedbackMode::Semi) => OgHybrid::partial(n_arms, b, box_budget, eps()?, cap()?)?,
                _ => OgHybrid::full(n_arms, b, box_budget, eps()?)?,
            }),
            PolicySpec::UniformRandom => Learner::Uniform { n_arms, budget: b },
        })
    }

    /// This round's schedule.
    pub fn propose(&mut self, rng: &mut SimRng) -> Schedule {
        match self {
            Learner::Fpml { state, last_noise } => {
                let (sel, p) = state.select_recording(rng);
                *last_noise = p;
                sel.into_arms()
            }
            Learner::Ftml(state) => state.leaders().into_arms(),
            Learner::FpmlPartial(p) => p.select(rng).into_arms(),
            Learner::Hedge { state, budget } => sample_distinct(&state.distribution(), *budget, rng),
            Learner::Exp3 { state, budget } => sample_distinct(&state.distribution(), *budget, rng),
            Learner::Og(og) => og.propose(rng),
            Learner::OgHybrid(h) => h.propose(rng),
            Learner::Uniform { n_arms, budget } => sample(rng, *n_arms, *budget).into_iter().map(ArmId).collect(),
        }
    }

    /// Applies the round's feedback. Returns whether the perturbed leader
    /// escaped the selection, for learners where that is defined.
    pub fn learn(
        &mut self,
        schedule: &[ArmId],
        input: RoundInput<'_>,
        feedback: FeedbackMode,
        rng: &mut SimRng,
    ) -> Result<Option<bool>> {
        let costs = match input {
            RoundInput::Costs(c) => Some(c),
            RoundInput::Job(_) => None,
        };
        let need_costs = || {
            costs.ok_or_else(|| Error::Unsupported("this learner needs cost vectors, not jobs".into()))
        };
        match self {
            Learner::Fpml { state, last_noise } => {
                state.update_full(need_costs()?)?;
                let sel = Selection::from_unchecked(schedule.to_vec());
                Ok(Some(escape_event(state.cumulative_costs(), last_noise, &sel)))
            }
            Learner::Ftml(state) => {
                state.update_full(need_costs()?)?;
                let sel = Selection::from_unchecked(schedule.to_vec());
                let zeros = vec![0.0; state.n_arms()];
                Ok(Some(escape_event(state.cumulative_costs(), &zeros, &sel)))
            }
            Learner::FpmlPartial(p) => {
                let c = need_costs()?;
                let observed: Vec<(ArmId, f64)> = schedule.iter().map(|&a| (a, c.get(a))).collect();
                let est = p.estimate(&observed, rng)?;
                p.update(&est)?;
                Ok(None)
            }
            Learner::Hedge { state, .. } => {
                state.update(need_costs()?.values())?;
                Ok(None)
            }
            Learner::Exp3 { state, .. } => {
                // Only the first draw came from the played distribution.
                let first = schedule[0];
                state.update(first, need_costs()?.get(first))?;
                Ok(None)
            }
            Learner::Og(og) => {
                with_job(input, |job| {
                    let view = view_for(job, schedule, feedback);
                    og.feedback(&view).map(|_| ())
                })?;
                Ok(None)
            }
            Learner::OgHybrid(h) => {
                with_job(input, |job| {
                    let view = view_for(job, schedule, feedback);
                    h.feedback(&view, rng).map(|_| ())
                })?;
                Ok(None)
            }
            Learner::Uniform { .. } => Ok(None),
        }
    }
}

fn view_for<'a>(job: &'a dyn Job, schedule: &[ArmId], feedback: FeedbackMode) -> JobView<'a> {
    match feedback {
        FeedbackMode::Full => JobView::full(job),
        FeedbackMode::Semi => JobView::semi_bandit(job, schedule),
    }
}

/// Runs `f` on the round's job, wrapping a cost vector as a max-reward job.
fn with_job<T>(input: RoundInput<'_>, f: impl FnOnce(&dyn Job) -> Result<T>) -> Result<T> {
    match input {
        RoundInput::Job(j) => f(j),
        RoundInput::Costs(c) => f(&MaxRewardJob::from_costs(c)),
    }
}

/// Schedule length check shared by every learner.
pub(crate) fn check_schedule(schedule: &[ArmId], budget: usize, n_arms: usize) -> Result<()> {
    if schedule.len() != budget {
        return Err(Error::ContractViolation(format!(
            "learner proposed {} actions for budget {budget}",
            schedule.len()
        )));
    }
    if let Some(a) = schedule.iter().find(|a| a.0 >= n_arms) {
        return Err(Error::InvalidArm { index: a.0, n_arms });
    }
    Ok(())
}
