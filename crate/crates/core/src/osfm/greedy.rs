use rand::Rng;

use super::job::{JobView, Schedule};
use crate::domain::ArmId;
use crate::error::{Error, Result};
use crate::policies::{Exp3, Fpml, FpmlPartial, Hedge};

/// Per-box feedback: the cost fed back for each arm, `None` where the arm
/// was unobservable.
pub type BoxFeedback = Vec<Option<f64>>;

/// `1 - (f(prefix + a) - f(prefix))`, checked to lie in `[0, 1]`.
fn greedy_cost(view: &JobView<'_>, prefix: &mut Schedule, base: f64, arm: ArmId) -> Result<f64> {
    prefix.push(arm);
    let with = view.eval(prefix);
    prefix.pop();
    let gain = with? - base;
    let cost = 1.0 - gain;
    const TOL: f64 = 1e-9;
    if !(-TOL..=1.0 + TOL).contains(&cost) {
        return Err(Error::ContractViolation(format!(
            "marginal gain {gain} of arm {arm} is outside [0, 1]; the job is not monotone"
        )));
    }
    Ok(cost.clamp(0.0, 1.0))
}

/// Experts subroutine of the online greedy scheduler.
#[derive(Debug, Clone)]
pub enum ExpertsBox {
    /// Full feedback.
    Hedge(Hedge),
    /// Bandit feedback on the proposed action only.
    Exp3(Exp3),
}

impl ExpertsBox {
    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> ArmId {
        match self {
            ExpertsBox::Hedge(h) => h.sample(rng),
            ExpertsBox::Exp3(e) => e.sample(rng),
        }
    }
}

/// Online greedy scheduler with unit-duration actions: `B` experts boxes,
/// each contributing one action per round. Box `i` is charged the
/// marginal-gain cost of its candidates on top of the actions realized by
/// boxes `1..i`.
#[derive(Debug, Clone)]
pub struct OnlineGreedy {
    n_arms: usize,
    boxes: Vec<ExpertsBox>,
    proposed: Schedule,
}

impl OnlineGreedy {
    pub fn new(n_arms: usize, boxes: Vec<ExpertsBox>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::BudgetOutOfRange { budget: 0, n_arms });
        }
        for b in &boxes {
            let n = match b {
                ExpertsBox::Hedge(h) => h.n_arms(),
                ExpertsBox::Exp3(e) => e.n_arms(),
            };
            if n != n_arms {
                return Err(Error::LengthMismatch {
                    what: "experts box arms",
                    expected: n_arms,
                    got: n,
                });
            }
        }
        Ok(OnlineGreedy {
            n_arms,
            boxes,
            proposed: Vec::new(),
        })
    }

    pub fn with_hedge(n_arms: usize, budget: usize, learning_rate: f64) -> Result<Self> {
        let boxes = (0..budget)
            .map(|_| Hedge::new(n_arms, learning_rate).map(ExpertsBox::Hedge))
            .collect::<Result<_>>()?;
        Self::new(n_arms, boxes)
    }

    pub fn with_exp3(n_arms: usize, budget: usize, gamma: f64, learning_rate: f64) -> Result<Self> {
        let boxes = (0..budget)
            .map(|_| Exp3::new(n_arms, gamma, learning_rate).map(ExpertsBox::Exp3))
            .collect::<Result<_>>()?;
        Self::new(n_arms, boxes)
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn budget(&self) -> usize {
        self.boxes.len()
    }

    pub fn boxes(&self) -> &[ExpertsBox] {
        &self.boxes
    }

    /// One action per box, appended in box order.
    pub fn propose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Schedule {
        self.proposed = self.boxes.iter().map(|b| b.propose(rng)).collect();
        self.proposed.clone()
    }

    /// Charges every box after the job is revealed. Hedge boxes receive
    /// the cost of every arm; Exp3 boxes only that of their own action.
    pub fn feedback(&mut self, view: &JobView<'_>) -> Result<Vec<BoxFeedback>> {
        if self.proposed.len() != self.boxes.len() {
            return Err(Error::ContractViolation(
                "feedback requested before a schedule was proposed".into(),
            ));
        }
        let mut out = Vec::with_capacity(self.boxes.len());
        let mut prefix: Schedule = Vec::with_capacity(self.boxes.len() + 1);
        for (i, b) in self.boxes.iter_mut().enumerate() {
            let base = view.eval(&prefix)?;
            let mut fb = vec![None; self.n_arms];
            match b {
                ExpertsBox::Hedge(h) => {
                    let mut costs = vec![0.0; self.n_arms];
                    for (a, c) in costs.iter_mut().enumerate() {
                        *c = greedy_cost(view, &mut prefix, base, ArmId(a))?;
                        fb[a] = Some(*c);
                    }
                    h.update(&costs)?;
                }
                ExpertsBox::Exp3(e) => {
                    let a = self.proposed[i];
                    let c = greedy_cost(view, &mut prefix, base, a)?;
                    fb[a.0] = Some(c);
                    e.update(a, c)?;
                }
            }
            prefix.push(self.proposed[i]);
            out.push(fb);
        }
        Ok(out)
    }
}

/// Perturbed-leader box of the hybrid scheduler.
#[derive(Debug, Clone)]
pub enum HybridBox {
    Full(Fpml),
    Partial(FpmlPartial),
}

impl HybridBox {
    fn inner(&self) -> &Fpml {
        match self {
            HybridBox::Full(f) => f,
            HybridBox::Partial(p) => p.inner(),
        }
    }
}

/// What the hybrid scheduler fed back in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridFeedback {
    pub costs: Vec<BoxFeedback>,
    /// Lowest-cost pulled action of each box, in box order.
    pub best_actions: Vec<ArmId>,
}

/// Hybrid greedy scheduler: `L = B / B_box` perturbed-leader boxes, each
/// pulling `B_box` arms. Box `i` is charged marginal-gain costs on top of
/// the best actions of boxes `1..i`.
#[derive(Debug, Clone)]
pub struct OgHybrid {
    n_arms: usize,
    total_budget: usize,
    box_budget: usize,
    boxes: Vec<HybridBox>,
    proposed: Vec<Vec<ArmId>>,
}

impl OgHybrid {
    pub fn new(n_arms: usize, total_budget: usize, boxes: Vec<HybridBox>) -> Result<Self> {
        let first = boxes
            .first()
            .ok_or_else(|| Error::param("hybrid scheduler needs at least one box"))?;
        let box_budget = first.inner().budget();
        if box_budget == 0 || !total_budget.is_multiple_of(box_budget) {
            return Err(Error::IndivisibleBudget {
                budget: total_budget,
                box_budget,
            });
        }
        if boxes.len() != total_budget / box_budget {
            return Err(Error::param(format!(
                "{} boxes of budget {box_budget} do not make total budget {total_budget}",
                boxes.len()
            )));
        }
        for b in &boxes {
            let inner = b.inner();
            if inner.n_arms() != n_arms || inner.budget() != box_budget {
                return Err(Error::param("every box needs the same arm count and budget"));
            }
        }
        Ok(OgHybrid {
            n_arms,
            total_budget,
            box_budget,
            boxes,
            proposed: Vec::new(),
        })
    }

    fn check_split(total_budget: usize, box_budget: usize) -> Result<usize> {
        if box_budget == 0 || total_budget == 0 || !total_budget.is_multiple_of(box_budget) {
            return Err(Error::IndivisibleBudget {
                budget: total_budget,
                box_budget,
            });
        }
        Ok(total_budget / box_budget)
    }

    /// Full-feedback boxes with fresh noise.
    pub fn full(n_arms: usize, total_budget: usize, box_budget: usize, epsilon: f64) -> Result<Self> {
        let l = Self::check_split(total_budget, box_budget)?;
        let boxes = (0..l)
            .map(|_| Fpml::new(n_arms, box_budget, epsilon).map(HybridBox::Full))
            .collect::<Result<_>>()?;
        Self::new(n_arms, total_budget, boxes)
    }

    /// Semi-bandit boxes using geometric resampling capped at `cap`.
    pub fn partial(
        n_arms: usize,
        total_budget: usize,
        box_budget: usize,
        epsilon: f64,
        cap: u32,
    ) -> Result<Self> {
        let l = Self::check_split(total_budget, box_budget)?;
        let boxes = (0..l)
            .map(|_| {
                FpmlPartial::new(Fpml::new(n_arms, box_budget, epsilon)?, cap).map(HybridBox::Partial)
            })
            .collect::<Result<_>>()?;
        Self::new(n_arms, total_budget, boxes)
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn total_budget(&self) -> usize {
        self.total_budget
    }

    pub fn box_budget(&self) -> usize {
        self.box_budget
    }

    pub fn boxes(&self) -> &[HybridBox] {
        &self.boxes
    }

    /// Concatenation of every box's selection, in box order.
    pub fn propose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Schedule {
        self.proposed = self
            .boxes
            .iter()
            .map(|b| b.inner().select(rng).into_arms())
            .collect();
        self.proposed.concat()
    }

    pub fn feedback<R: Rng + ?Sized>(&mut self, view: &JobView<'_>, rng: &mut R) -> Result<HybridFeedback> {
        if self.proposed.len() != self.boxes.len() {
            return Err(Error::ContractViolation(
                "feedback requested before a schedule was proposed".into(),
            ));
        }
        let mut costs = Vec::with_capacity(self.boxes.len());
        let mut best_actions: Schedule = Vec::with_capacity(self.boxes.len());
        for (i, b) in self.boxes.iter_mut().enumerate() {
            let base = view.eval(&best_actions)?;
            let mut prefix = best_actions.clone();
            let pulled = &self.proposed[i];
            let mut fb = vec![None; self.n_arms];
            match b {
                HybridBox::Full(f) => {
                    let mut vec = vec![0.0; self.n_arms];
                    for (a, c) in vec.iter_mut().enumerate() {
                        *c = greedy_cost(view, &mut prefix, base, ArmId(a))?;
                        fb[a] = Some(*c);
                    }
                    f.update(&vec)?;
                }
                HybridBox::Partial(p) => {
                    let mut observed = Vec::with_capacity(pulled.len());
                    for &a in pulled {
                        let c = greedy_cost(view, &mut prefix, base, a)?;
                        fb[a.0] = Some(c);
                        observed.push((a, c));
                    }
                    let est = p.estimate(&observed, rng)?;
                    p.update(&est)?;
                }
            }
            // First pulled action of minimum cost, in the box's pull order.
            let mut best = pulled[0];
            for &a in &pulled[1..] {
                if fb[a.0].unwrap() < fb[best.0].unwrap() {
                    best = a;
                }
            }
            best_actions.push(best);
            costs.push(fb);
        }
        Ok(HybridFeedback { costs, best_actions })
    }
}

/// Total budget `ceil(B' * B_box * ln T)` under which the hybrid scheduler
/// competes with the best fixed schedule of length `B'`.
pub fn theorem2_budget(target_len: usize, box_budget: usize, horizon: f64) -> Result<usize> {
    if target_len == 0 || box_budget == 0 || !(horizon >= 1.0) {
        return Err(Error::param("B', B_box and T must all be at least 1"));
    }
    Ok((target_len as f64 * box_budget as f64 * horizon.ln()).ceil() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::rng_from_seed;
    use crate::osfm::job::{Job, MaxRewardJob};

    fn job(r: &[f64]) -> MaxRewardJob {
        MaxRewardJob::new(r.to_vec()).unwrap()
    }

    #[test]
    fn og_single_box_feedback() {
        let mut rng = rng_from_seed(1);
        let mut og = OnlineGreedy::with_hedge(2, 1, 0.0).unwrap();
        let j = job(&[0.9, 0.4]);
        // Force the proposal to arm 1.
        og.proposed = vec![ArmId(1)];
        let fb = og.feedback(&JobView::full(&j)).unwrap();
        let c = &fb[0];
        assert!((c[0].unwrap() - 0.1).abs() < 1e-12);
        assert!((c[1].unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(og.propose(&mut rng).len(), 1);
    }

    #[test]
    fn zero_and_saturated_jobs_cost_one() {
        let mut rng = rng_from_seed(2);
        let mut og = OnlineGreedy::with_hedge(3, 3, 0.5).unwrap();
        og.propose(&mut rng);
        let fb = og.feedback(&JobView::full(&job(&[0.0, 0.0, 0.0]))).unwrap();
        assert!(fb.iter().flatten().all(|c| *c == Some(1.0)));

        // Box 2 and 3 see a prefix already worth 1.
        og.proposed = vec![ArmId(0), ArmId(1), ArmId(2)];
        let fb = og.feedback(&JobView::full(&job(&[1.0, 0.3, 0.6]))).unwrap();
        for box_fb in &fb[1..] {
            assert!(box_fb.iter().all(|c| *c == Some(1.0)));
        }
    }

    #[test]
    fn exp3_boxes_only_see_their_action() {
        let mut rng = rng_from_seed(3);
        let mut og = OnlineGreedy::with_exp3(4, 2, 0.5, 0.1).unwrap();
        let sched = og.propose(&mut rng);
        let j = job(&[0.9, 0.4, 0.2, 0.7]);
        let fb = og.feedback(&JobView::semi_bandit(&j, &sched)).unwrap();
        for (i, box_fb) in fb.iter().enumerate() {
            let seen: Vec<usize> = (0..4).filter(|a| box_fb[*a].is_some()).collect();
            assert_eq!(seen, vec![sched[i].0]);
        }
    }

    #[test]
    fn hybrid_second_box_saturated() {
        let mut hy = OgHybrid::full(2, 2, 1, 0.5).unwrap();
        hy.proposed = vec![vec![ArmId(0)], vec![ArmId(1)]];
        let mut rng = rng_from_seed(0);
        let fb = hy.feedback(&JobView::full(&job(&[0.9, 0.4])), &mut rng).unwrap();
        assert_eq!(fb.best_actions, vec![ArmId(0), ArmId(1)]);
        // 1 - (max(0.9, 0.4) - 0.9)
        assert_eq!(fb.costs[1][1], Some(1.0));
        assert!((fb.costs[0][1].unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn hybrid_requires_divisible_budget() {
        assert!(matches!(
            OgHybrid::full(5, 4, 3, 0.5),
            Err(Error::IndivisibleBudget { budget: 4, box_budget: 3 })
        ));
        assert!(OgHybrid::full(5, 4, 2, 0.5).is_ok());
        assert!(OgHybrid::partial(5, 6, 3, 0.5, 0).is_err());
    }

    #[test]
    fn hybrid_schedules_have_length_budget() {
        let mut rng = rng_from_seed(4);
        for (b, bb) in [(6, 1), (6, 2), (6, 3), (6, 6)] {
            let mut hy = OgHybrid::partial(8, b, bb, 0.1, 10).unwrap();
            for _ in 0..20 {
                let s = hy.propose(&mut rng);
                assert_eq!(s.len(), b);
                let costs: Vec<f64> = (0..8).map(|a| a as f64 / 10.0).collect();
                let j = MaxRewardJob::from_costs(&crate::domain::CostVector::new(costs).unwrap());
                let fb = hy.feedback(&JobView::semi_bandit(&j, &s), &mut rng).unwrap();
                assert_eq!(fb.costs.len(), b / bb);
                let best_val = j.value(&fb.best_actions);
                assert!(best_val <= j.value(&s));
            }
        }
    }

    #[test]
    fn theorem2_budget_values() {
        assert_eq!(theorem2_budget(1, 1, std::f64::consts::E).unwrap(), 1);
        assert_eq!(theorem2_budget(2, 3, 1000.0).unwrap(), 42);
        let bb = 1000f64.ln().ceil() as usize;
        assert_eq!(theorem2_budget(1, bb, 1000.0).unwrap(), 49);
        assert!(theorem2_budget(0, 1, 10.0).is_err());
    }
}
