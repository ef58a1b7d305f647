use rand::Rng;

use crate::domain::{exponential, ArmId, CostVector, Selection};
use crate::error::{Error, Result};

/// Indices of the `k` smallest entries in rank order, ties broken by
/// ascending index.
pub(crate) fn lowest_k(values: &[f64], k: usize) -> Vec<ArmId> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let cmp = |a: &usize, b: &usize| values[*a].total_cmp(&values[*b]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx.into_iter().map(ArmId).collect()
}

/// Index of the smallest entry, lowest index on ties.
pub(crate) fn argmin(values: &[f64]) -> ArmId {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    ArmId(best)
}

/// Follow the Perturbed Multiple Leaders.
///
/// Each round every arm's cumulative cost is lowered by an independent
/// exponential perturbation with rate `epsilon` (mean `1/epsilon`) and the
/// `budget` arms with the lowest perturbed cost are pulled. With frozen
/// noise the perturbation is drawn once at construction and reused.
#[derive(Debug, Clone)]
pub struct Fpml {
    n_arms: usize,
    budget: usize,
    epsilon: f64,
    cumulative: Vec<f64>,
    frozen_noise: Option<Vec<f64>>,
}

impl Fpml {
    /// Fresh noise every round.
    pub fn new(n_arms: usize, budget: usize, epsilon: f64) -> Result<Self> {
        if budget == 0 || budget > n_arms {
            return Err(Error::BudgetOutOfRange { budget, n_arms });
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: epsilon,
                range: "(0, inf)",
            });
        }
        Ok(Fpml {
            n_arms,
            budget,
            epsilon,
            cumulative: vec![0.0; n_arms],
            frozen_noise: None,
        })
    }

    /// One perturbation per arm drawn now and reused every round.
    pub fn with_frozen_noise<R: Rng + ?Sized>(
        n_arms: usize,
        budget: usize,
        epsilon: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut state = Self::new(n_arms, budget, epsilon)?;
        state.frozen_noise = Some(state.draw_noise(rng));
        Ok(state)
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn fresh_noise(&self) -> bool {
        self.frozen_noise.is_none()
    }

    pub fn frozen_noise(&self) -> Option<&[f64]> {
        self.frozen_noise.as_deref()
    }

    pub fn cumulative_costs(&self) -> &[f64] {
        &self.cumulative
    }

    /// Overwrites the cumulative costs; used to place the policy in a
    /// chosen state.
    pub fn set_cumulative_costs(&mut self, costs: Vec<f64>) -> Result<()> {
        if costs.len() != self.n_arms {
            return Err(Error::LengthMismatch {
                what: "cumulative costs",
                expected: self.n_arms,
                got: costs.len(),
            });
        }
        self.cumulative = costs;
        Ok(())
    }

    fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.n_arms)
            .map(|_| exponential(rng, self.epsilon))
            .collect()
    }

    /// The perturbation for this round: the frozen draw, or a fresh one.
    pub fn perturbation<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.frozen_noise {
            Some(p) => p.clone(),
            None => self.draw_noise(rng),
        }
    }

    /// Arms pulled under an explicit perturbation `p`: the `budget` lowest
    /// entries of `C - p`.
    pub fn select_with_perturbation(&self, p: &[f64]) -> Selection {
        debug_assert_eq!(p.len(), self.n_arms);
        let perturbed: Vec<f64> = self
            .cumulative
            .iter()
            .zip(p)
            .map(|(c, n)| c - n)
            .collect();
        Selection::from_unchecked(lowest_k(&perturbed, self.budget))
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Selection {
        self.select_recording(rng).0
    }

    /// Selection together with the perturbation that produced it.
    pub fn select_recording<R: Rng + ?Sized>(&self, rng: &mut R) -> (Selection, Vec<f64>) {
        let p = self.perturbation(rng);
        (self.select_with_perturbation(&p), p)
    }

    /// Selection under a new perturbation even in frozen-noise mode.
    pub fn select_fresh<R: Rng + ?Sized>(&self, rng: &mut R) -> Selection {
        let p = self.draw_noise(rng);
        self.select_with_perturbation(&p)
    }

    /// Zero-perturbation leaders: the `budget` lowest cumulative costs.
    pub fn leaders(&self) -> Selection {
        Selection::from_unchecked(lowest_k(&self.cumulative, self.budget))
    }

    /// Adds `costs[a]` to every arm's cumulative cost. Accepts any finite
    /// non-negative values so that importance-weighted estimates fit.
    pub fn update(&mut self, costs: &[f64]) -> Result<()> {
        if costs.len() != self.n_arms {
            return Err(Error::LengthMismatch {
                what: "cost vector",
                expected: self.n_arms,
                got: costs.len(),
            });
        }
        if let Some(&bad) = costs.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::OutOfRange {
                what: "cost",
                value: bad,
                range: "[0, inf)",
            });
        }
        for (acc, c) in self.cumulative.iter_mut().zip(costs) {
            *acc += c;
        }
        Ok(())
    }

    pub fn update_full(&mut self, costs: &CostVector) -> Result<()> {
        self.update(costs.values())
    }
}

/// Whether the perturbed leader after an update lies outside the round's
/// selection. `cumulative_after` already includes the round's costs and
/// `perturbation` is the one that produced `selection`.
pub fn escape_event(cumulative_after: &[f64], perturbation: &[f64], selection: &Selection) -> bool {
    let perturbed: Vec<f64> = cumulative_after
        .iter()
        .zip(perturbation)
        .map(|(c, p)| c - p)
        .collect();
    !selection.contains(argmin(&perturbed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::rng_from_seed;
    use proptest::prelude::*;

    #[test]
    fn construction() {
        let s = Fpml::new(3, 1, 0.5).unwrap();
        assert_eq!(s.cumulative_costs(), &[0.0, 0.0, 0.0]);
        assert!(s.fresh_noise());
        assert!(matches!(
            Fpml::new(3, 4, 0.5),
            Err(Error::BudgetOutOfRange { budget: 4, n_arms: 3 })
        ));
        assert!(Fpml::new(3, 0, 0.5).is_err());
        assert!(Fpml::new(3, 1, 0.0).is_err());
        assert!(Fpml::new(9, 1, 0.0932).is_ok());
    }

    #[test]
    fn frozen_noise_is_reused() {
        let mut rng = rng_from_seed(5);
        let s = Fpml::with_frozen_noise(6, 2, 0.3, &mut rng).unwrap();
        let a = s.select(&mut rng);
        let b = s.select(&mut rng);
        assert_eq!(a, b);
        assert_eq!(s.frozen_noise().unwrap().len(), 6);
    }

    #[test]
    fn injected_noise_selection() {
        let mut s = Fpml::new(3, 1, 1.0).unwrap();
        s.set_cumulative_costs(vec![0.0, 0.3, 0.9]).unwrap();
        let sel = s.select_with_perturbation(&[0.5, 0.0, 0.0]);
        assert_eq!(sel.arms(), &[ArmId(0)]);
    }

    #[test]
    fn zero_noise_ties_break_by_index() {
        let s = Fpml::new(3, 2, 1.0).unwrap();
        assert_eq!(s.select_with_perturbation(&[0.0; 3]).arms(), &[ArmId(0), ArmId(1)]);
        assert_eq!(s.leaders().arms(), &[ArmId(0), ArmId(1)]);
    }

    #[test]
    fn full_budget_pulls_every_arm() {
        let mut rng = rng_from_seed(1);
        let mut s = Fpml::new(5, 5, 0.2).unwrap();
        s.set_cumulative_costs(vec![3.0, 1.0, 4.0, 1.0, 5.0]).unwrap();
        for _ in 0..20 {
            assert_eq!(s.select(&mut rng).sorted_indices(), vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn leaders_rank_order() {
        let mut s = Fpml::new(3, 2, 1.0).unwrap();
        s.set_cumulative_costs(vec![0.3, 0.1, 0.9]).unwrap();
        assert_eq!(s.leaders().arms(), &[ArmId(1), ArmId(0)]);
        let all = Fpml::new(3, 3, 1.0).unwrap();
        assert_eq!(all.leaders().sorted_indices(), vec![0, 1, 2]);
    }

    #[test]
    fn full_feedback_update() {
        let mut s = Fpml::new(2, 1, 1.0).unwrap();
        s.update_full(&CostVector::new(vec![0.2, 0.7]).unwrap()).unwrap();
        assert_eq!(s.cumulative_costs(), &[0.2, 0.7]);
        s.update_full(&CostVector::zeros(2)).unwrap();
        assert_eq!(s.cumulative_costs(), &[0.2, 0.7]);
        s.update_full(&CostVector::new(vec![0.1, 0.1]).unwrap()).unwrap();
        let c = s.cumulative_costs();
        assert!((c[0] - 0.3).abs() < 1e-15 && (c[1] - 0.8).abs() < 1e-15);
        assert!(matches!(s.update(&[0.1]), Err(Error::LengthMismatch { .. })));
        assert!(s.update(&[0.1, -1.0]).is_err());
    }

    #[test]
    fn escape_detection() {
        let sel = Selection::new(vec![ArmId(0)], 3).unwrap();
        assert!(!escape_event(&[0.0, 1.0, 2.0], &[0.0; 3], &sel));
        assert!(escape_event(&[1.0, 0.5, 2.0], &[0.0; 3], &sel));
    }

    proptest! {
        #[test]
        fn selection_is_valid(
            cum in prop::collection::vec(0.0f64..50.0, 1..20),
            budget_frac in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let n = cum.len();
            let b = 1 + ((n - 1) as f64 * budget_frac) as usize;
            let mut s = Fpml::new(n, b, 0.3).unwrap();
            s.set_cumulative_costs(cum).unwrap();
            let sel = s.select(&mut rng_from_seed(seed));
            prop_assert_eq!(sel.len(), b);
            prop_assert!(Selection::new(sel.arms().to_vec(), n).is_ok());
        }

        #[test]
        fn shift_invariance(
            cum in prop::collection::vec(0.0f64..10.0, 2..12),
            noise in prop::collection::vec(0.0f64..5.0, 12),
            shift in 0.0f64..100.0,
        ) {
            let n = cum.len();
            let p = &noise[..n];
            let b = (n / 2).max(1);
            let mut a = Fpml::new(n, b, 1.0).unwrap();
            a.set_cumulative_costs(cum.clone()).unwrap();
            let mut shifted = a.clone();
            shifted.set_cumulative_costs(cum.iter().map(|c| c + shift).collect()).unwrap();
            // Shifting can merge nearly-equal perturbed values through rounding;
            // compare only when the ordering gaps are resolvable.
            let perturbed: Vec<f64> = cum.iter().zip(p).map(|(c, q)| c - q).collect();
            let mut sorted = perturbed.clone();
            sorted.sort_by(f64::total_cmp);
            let min_gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            prop_assume!(min_gap > 1e-9);
            prop_assert_eq!(a.select_with_perturbation(p), shifted.select_with_perturbation(p));
        }

        #[test]
        fn permutation_equivariance(
            cum in prop::collection::vec(0.0f64..10.0, 2..10),
            noise in prop::collection::vec(0.0f64..5.0, 10),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let n = cum.len();
            let p = noise[..n].to_vec();
            let b = (n / 2).max(1);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng_from_seed(seed));
            let mut a = Fpml::new(n, b, 1.0).unwrap();
            a.set_cumulative_costs(cum.clone()).unwrap();
            // Arm i of the original becomes arm perm[i].
            let mut pc = vec![0.0; n];
            let mut pp = vec![0.0; n];
            for i in 0..n {
                pc[perm[i]] = cum[i];
                pp[perm[i]] = p[i];
            }
            let mut b2 = Fpml::new(n, b, 1.0).unwrap();
            b2.set_cumulative_costs(pc).unwrap();
            let perturbed: Vec<f64> = cum.iter().zip(&p).map(|(c, q)| c - q).collect();
            let mut sorted = perturbed.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assume!(sorted.windows(2).all(|w| w[1] > w[0]));
            let original: Vec<usize> = a.select_with_perturbation(&p).arms().iter().map(|x| perm[x.0]).collect();
            let permuted: Vec<usize> = b2.select_with_perturbation(&pp).arms().iter().map(|x| x.0).collect();
            prop_assert_eq!(original, permuted);
        }
    }
}
