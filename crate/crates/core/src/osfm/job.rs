use std::fmt;

use rand::Rng;

use crate::domain::{check_unit, ArmId, CostVector};
use crate::error::{Error, Result};

/// A finite sequence of unit-duration actions. Duplicates are allowed.
pub type Schedule = Vec<ArmId>;

/// Monotone submodular `[0, 1]`-valued function over schedules.
pub trait Job: Send + Sync {
    fn n_arms(&self) -> usize;

    /// Value of a schedule whose actions are all valid arms.
    fn value(&self, schedule: &[ArmId]) -> f64;

    /// Whether the value can depend on action order.
    fn order_sensitive(&self) -> bool {
        true
    }
}

fn check_arms(n_arms: usize, schedule: &[ArmId]) -> Result<()> {
    match schedule.iter().find(|a| a.0 >= n_arms) {
        Some(a) => Err(Error::InvalidArm { index: a.0, n_arms }),
        None => Ok(()),
    }
}

/// Evaluates `job` on `schedule` after validating every action.
pub fn job_eval(job: &dyn Job, schedule: &[ArmId]) -> Result<f64> {
    check_arms(job.n_arms(), schedule)?;
    Ok(job.value(schedule))
}

/// `f(S) = max_{a in S} r(a)`, zero on the empty schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxRewardJob {
    rewards: Vec<f64>,
}

impl MaxRewardJob {
    pub fn new(rewards: Vec<f64>) -> Result<Self> {
        if rewards.is_empty() {
            return Err(Error::EmptyInput);
        }
        for &r in &rewards {
            check_unit("reward", r)?;
        }
        Ok(MaxRewardJob { rewards })
    }

    /// Rewards `1 - c(a)`.
    pub fn from_costs(costs: &CostVector) -> Self {
        MaxRewardJob {
            rewards: costs.values().iter().map(|c| 1.0 - c).collect(),
        }
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }
}

impl Job for MaxRewardJob {
    fn n_arms(&self) -> usize {
        self.rewards.len()
    }

    fn value(&self, schedule: &[ArmId]) -> f64 {
        schedule
            .iter()
            .map(|a| self.rewards[a.0])
            .fold(0.0, f64::max)
    }

    fn order_sensitive(&self) -> bool {
        false
    }
}

/// Weighted coverage: `f(S)` is the total weight of elements covered by
/// any action in `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageJob {
    weights: Vec<f64>,
    covers: Vec<Vec<usize>>,
}

impl CoverageJob {
    pub fn new(weights: Vec<f64>, covers: Vec<Vec<usize>>) -> Result<Self> {
        if covers.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::OutOfRange {
                what: "element weight",
                value: w,
                range: "[0, inf)",
            });
        }
        let total: f64 = weights.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::OutOfRange {
                what: "total element weight",
                value: total,
                range: "[0, 1]",
            });
        }
        for (arm, elems) in covers.iter().enumerate() {
            if let Some(&e) = elems.iter().find(|e| **e >= weights.len()) {
                return Err(Error::param(format!(
                    "arm {arm} covers element {e}, but only {} elements exist",
                    weights.len()
                )));
            }
        }
        Ok(CoverageJob { weights, covers })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn covers(&self) -> &[Vec<usize>] {
        &self.covers
    }
}

impl Job for CoverageJob {
    fn n_arms(&self) -> usize {
        self.covers.len()
    }

    fn value(&self, schedule: &[ArmId]) -> f64 {
        let mut covered = vec![false; self.weights.len()];
        for a in schedule {
            for &e in &self.covers[a.0] {
                covered[e] = true;
            }
        }
        let v: f64 = covered
            .iter()
            .zip(&self.weights)
            .filter(|(c, _)| **c)
            .map(|(_, w)| w)
            .sum();
        v.min(1.0)
    }

    fn order_sensitive(&self) -> bool {
        false
    }
}

/// A job defined by a closure; no properties are assumed.
pub struct FnJob<F> {
    n_arms: usize,
    f: F,
}

impl<F> FnJob<F>
where
    F: Fn(&[ArmId]) -> f64 + Send + Sync,
{
    pub fn new(n_arms: usize, f: F) -> Self {
        FnJob { n_arms, f }
    }
}

impl<F> Job for FnJob<F>
where
    F: Fn(&[ArmId]) -> f64 + Send + Sync,
{
    fn n_arms(&self) -> usize {
        self.n_arms
    }

    fn value(&self, schedule: &[ArmId]) -> f64 {
        (self.f)(schedule)
    }
}

/// Restricts which schedules a learner may evaluate. Under semi-bandit
/// feedback only schedules made of this round's pulled actions are
/// observable.
pub struct JobView<'a> {
    job: &'a dyn Job,
    observable: Option<Vec<bool>>,
}

impl<'a> JobView<'a> {
    pub fn full(job: &'a dyn Job) -> Self {
        JobView {
            job,
            observable: None,
        }
    }

    pub fn semi_bandit(job: &'a dyn Job, pulled: &[ArmId]) -> Self {
        let mut mask = vec![false; job.n_arms()];
        for a in pulled {
            if a.0 < mask.len() {
                mask[a.0] = true;
            }
        }
        JobView {
            job,
            observable: Some(mask),
        }
    }

    pub fn n_arms(&self) -> usize {
        self.job.n_arms()
    }

    pub fn is_full(&self) -> bool {
        self.observable.is_none()
    }

    pub fn eval(&self, schedule: &[ArmId]) -> Result<f64> {
        check_arms(self.job.n_arms(), schedule)?;
        if let Some(mask) = &self.observable {
            if let Some(a) = schedule.iter().find(|a| !mask[a.0]) {
                return Err(Error::Unsupported(format!(
                    "arm {a} was not pulled this round and is unobservable under semi-bandit feedback"
                )));
            }
        }
        Ok(self.job.value(schedule))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobProperty {
    Monotonicity,
    Submodularity,
    Subsequence,
}

impl fmt::Display for JobProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            JobProperty::Monotonicity => "monotonicity",
            JobProperty::Submodularity => "submodularity",
            JobProperty::Subsequence => "subsequence monotonicity",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropertyReport {
    Pass {
        checked: usize,
    },
    Counterexample {
        property: JobProperty,
        s1: Schedule,
        s2: Schedule,
        s3: Schedule,
        arm: ArmId,
        /// Left and right sides of the violated inequality `lhs <= rhs`.
        lhs: f64,
        rhs: f64,
    },
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        matches!(self, PropertyReport::Pass { .. })
    }
}

fn random_schedule<R: Rng + ?Sized>(n_arms: usize, rng: &mut R) -> Schedule {
    let len = rng.random_range(0..=3);
    (0..len).map(|_| ArmId(rng.random_range(0..n_arms))).collect()
}

fn cat(parts: &[&[ArmId]]) -> Schedule {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// Randomized check of monotonicity, submodularity and subsequence
/// monotonicity over `samples` draws of `(S1, S2, S3, a)`.
pub fn check_job_properties<R: Rng + ?Sized>(
    job: &dyn Job,
    n_arms: usize,
    samples: usize,
    rng: &mut R,
) -> Result<PropertyReport> {
    if samples == 0 {
        return Err(Error::param("sample budget must be at least 1"));
    }
    if n_arms == 0 || n_arms > job.n_arms() {
        return Err(Error::param(format!(
            "cannot sample {n_arms} arms from a job over {}",
            job.n_arms()
        )));
    }
    const TOL: f64 = 1e-12;
    for _ in 0..samples {
        let s1 = random_schedule(n_arms, rng);
        let s2 = random_schedule(n_arms, rng);
        let s3 = random_schedule(n_arms, rng);
        let a = ArmId(rng.random_range(0..n_arms));
        let f = |s: &[ArmId]| job.value(s);
        let ce = |property, lhs: f64, rhs: f64| PropertyReport::Counterexample {
            property,
            s1: s1.clone(),
            s2: s2.clone(),
            s3: s3.clone(),
            arm: a,
            lhs,
            rhs,
        };

        let f12 = f(&cat(&[&s1, &s2]));
        for lhs in [f(&s1), f(&s2)] {
            if lhs > f12 + TOL {
                return Ok(ce(JobProperty::Monotonicity, lhs, f12));
            }
        }
        let gain_late = f(&cat(&[&s1, &s2, &[a]])) - f12;
        let gain_early = f(&cat(&[&s1, &[a]])) - f(&s1);
        if gain_late > gain_early + TOL {
            return Ok(ce(JobProperty::Submodularity, gain_late, gain_early));
        }
        let f13 = f(&cat(&[&s1, &s3]));
        let f123 = f(&cat(&[&s1, &s2, &s3]));
        if f13 > f123 + TOL {
            return Ok(ce(JobProperty::Subsequence, f13, f123));
        }
    }
    Ok(PropertyReport::Pass { checked: samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::rng_from_seed;

    fn s(ix: &[usize]) -> Schedule {
        ix.iter().copied().map(ArmId).collect()
    }

    #[test]
    fn max_reward_eval() {
        let job = MaxRewardJob::new(vec![0.9, 0.4]).unwrap();
        assert_eq!(job_eval(&job, &s(&[1])).unwrap(), 0.4);
        assert_eq!(job_eval(&job, &s(&[1, 0])).unwrap(), 0.9);
        assert_eq!(job_eval(&job, &[]).unwrap(), 0.0);
        assert!(matches!(
            job_eval(&job, &s(&[2])),
            Err(Error::InvalidArm { index: 2, n_arms: 2 })
        ));
    }

    #[test]
    fn coverage_eval() {
        let job = CoverageJob::new(vec![0.2, 0.3, 0.5], vec![vec![0, 1], vec![1], vec![2]]).unwrap();
        assert_eq!(job.value(&[]), 0.0);
        assert!((job.value(&s(&[0, 1])) - 0.5).abs() < 1e-15);
        assert!((job.value(&s(&[0, 1, 2])) - 1.0).abs() < 1e-15);
        assert!(CoverageJob::new(vec![0.7, 0.7], vec![vec![0]]).is_err());
        assert!(CoverageJob::new(vec![0.5], vec![vec![1]]).is_err());
    }

    #[test]
    fn property_check_accepts_standard_jobs() {
        let mut rng = rng_from_seed(8);
        let job = MaxRewardJob::new(vec![0.1, 0.9, 0.5, 0.3]).unwrap();
        assert!(check_job_properties(&job, 4, 2000, &mut rng).unwrap().passed());
        let cov = CoverageJob::new(
            vec![0.1, 0.2, 0.3, 0.4],
            vec![vec![0, 1], vec![1, 2], vec![3], vec![]],
        )
        .unwrap();
        assert!(check_job_properties(&cov, 4, 2000, &mut rng).unwrap().passed());
    }

    #[test]
    fn property_check_finds_non_monotone_job() {
        let mut rng = rng_from_seed(8);
        let job = FnJob::new(3, |sch: &[ArmId]| 1.0 - sch.len() as f64 / 10.0);
        match check_job_properties(&job, 3, 500, &mut rng).unwrap() {
            PropertyReport::Counterexample { property, lhs, rhs, .. } => {
                assert_eq!(property, JobProperty::Monotonicity);
                assert!(lhs > rhs);
            }
            other => panic!("expected a counterexample, got {other:?}"),
        }
        assert!(check_job_properties(&job, 3, 0, &mut rng).is_err());
    }

    #[test]
    fn semi_bandit_view_hides_unpulled_arms() {
        let job = MaxRewardJob::new(vec![0.9, 0.4, 0.2]).unwrap();
        let view = JobView::semi_bandit(&job, &s(&[1, 2]));
        assert_eq!(view.eval(&s(&[2, 1])).unwrap(), 0.4);
        assert!(view.eval(&s(&[0])).is_err());
        assert_eq!(JobView::full(&job).eval(&s(&[0])).unwrap(), 0.9);
    }
}
