//! Shared domain types: arms, per-round costs, selections, and the small set
//! of random draws the rest of the crate needs.
//!
//! Arms are dense indices `0..N`. Costs live in `[0, 1]`; a round in which a
//! set of arms is pulled incurs the minimum of their costs.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seeded stream used for every random draw in the crate.
pub type SimRng = ChaCha8Rng;

/// Index of an arm in `0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArmId(pub usize);

impl ArmId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for ArmId {
    fn from(i: usize) -> Self {
        ArmId(i)
    }
}

pub(crate) fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what,
            value,
            range: "[0, 1]",
        })
    }
}

/// The adversary's move for one round: a cost in `[0, 1]` per arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        for &v in &values {
            check_unit("cost", v)?;
        }
        Ok(CostVector(values))
    }

    pub fn zeros(n_arms: usize) -> Self {
        CostVector(vec![0.0; n_arms])
    }

    pub fn n_arms(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, arm: ArmId) -> f64 {
        self.0[arm.0]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Distinct arms pulled in one round, in rank order (best first).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Selection(Vec<ArmId>);

impl Selection {
    pub fn new(arms: Vec<ArmId>, n_arms: usize) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut seen = vec![false; n_arms];
        for &a in &arms {
            if a.0 >= n_arms {
                return Err(Error::InvalidArm {
                    index: a.0,
                    n_arms,
                });
            }
            if seen[a.0] {
                return Err(Error::DuplicateArm(a.0));
            }
            seen[a.0] = true;
        }
        Ok(Selection(arms))
    }

    /// Caller guarantees the arms are distinct and in range.
    pub(crate) fn from_unchecked(arms: Vec<ArmId>) -> Self {
        Selection(arms)
    }

    pub fn arms(&self) -> &[ArmId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, arm: ArmId) -> bool {
        self.0.contains(&arm)
    }

    /// Arm indices in ascending order.
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.0.iter().map(|a| a.0).collect();
        v.sort_unstable();
        v
    }

    pub fn into_arms(self) -> Vec<ArmId> {
        self.0
    }
}

/// Converts a cost in `[0, 1]` to the matching reward `1 - c`.
pub fn cost_to_reward(cost: f64) -> Result<f64> {
    check_unit("cost", cost)?;
    Ok(1.0 - cost)
}

/// Cost incurred by pulling `sel`: the minimum cost among its arms.
pub fn min_cost(sel: &[ArmId], costs: &CostVector) -> Result<f64> {
    if sel.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut best = f64::INFINITY;
    for &a in sel {
        if a.0 >= costs.n_arms() {
            return Err(Error::InvalidArm {
                index: a.0,
                n_arms: costs.n_arms(),
            });
        }
        best = best.min(costs.0[a.0]);
    }
    Ok(best)
}

/// Shape parameters of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

/// Moment-matched Beta shape: `alpha = mean * k`, `beta = (1 - mean) * k`
/// with `k = mean (1 - mean) / variance - 1`.
pub fn beta_from_moments(mean: f64, variance: f64) -> Result<BetaParams> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(Error::OutOfRange {
            what: "mean",
            value: mean,
            range: "(0, 1)",
        });
    }
    let bound = mean * (1.0 - mean);
    if !(variance > 0.0) || variance >= bound {
        return Err(Error::InfeasibleMoments {
            mean,
            variance,
            bound,
        });
    }
    let k = bound / variance - 1.0;
    Ok(BetaParams {
        alpha: mean * k,
        beta: (1.0 - mean) * k,
    })
}

/// Exponential draw with the given rate via `-ln(u) / rate`, `u` in `(0, 1]`.
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    -u.ln() / rate
}

/// Bernoulli draw returning 1.0 with probability `p`.
#[inline]
pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> f64 {
    if rng.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`: `master XOR mix64(index)`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    master ^ mix64(index)
}

/// Independent sub-stream of `seed` labelled by `stream`.
pub fn substream_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_add(0x5EED)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}

/// Row-major `T x N` matrix of per-round costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    n_rounds: usize,
    n_arms: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rounds = rows.len();
        if n_rounds == 0 {
            return Err(Error::EmptyInput);
        }
        let n_arms = rows[0].len();
        if n_arms == 0 {
            return Err(Error::EmptyInput);
        }
        let mut values = Vec::with_capacity(n_rounds * n_arms);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != n_arms {
                return Err(Error::RaggedRow {
                    row: t + 1,
                    expected: n_arms,
                    found: row.len(),
                });
            }
            for (a, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::CellOutOfRange {
                        row: t + 1,
                        column: a + 1,
                        value: v,
                    });
                }
            }
            values.extend(row);
        }
        Ok(CostMatrix {
            n_rounds,
            n_arms,
            values,
        })
    }

    pub fn from_cost_vectors(rows: &[CostVector]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|c| c.values().to_vec()).collect())
    }

    pub fn n_rounds(&self) -> usize {
        self.n_rounds
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_arms..(t + 1) * self.n_arms]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_arms)
    }

    pub fn cost_vector(&self, t: usize) -> CostVector {
        CostVector(self.row(t).to_vec())
    }

    /// First `n_rounds` rows.
    pub fn truncated(&self, n_rounds: usize) -> Result<Self> {
        if n_rounds == 0 || n_rounds > self.n_rounds {
            return Err(Error::param(format!(
                "cannot take {n_rounds} rounds from a matrix with {} rows",
                self.n_rounds
            )));
        }
        Ok(CostMatrix {
            n_rounds,
            n_arms: self.n_arms,
            values: self.values[..n_rounds * self.n_arms].to_vec(),
        })
    }

    /// Per-arm cumulative cost over all rounds.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_arms];
        for row in self.rows() {
            for (s, &v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    /// `sum_t min_{a in subset} m[t][a]`.
    pub fn subset_cost(&self, subset: &[ArmId]) -> f64 {
        self.rows()
            .map(|row| {
                subset
                    .iter()
                    .map(|a| row[a.0])
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Beta, Distribution};

    fn arms(ix: &[usize]) -> Vec<ArmId> {
        ix.iter().copied().map(ArmId).collect()
    }

    #[test]
    fn reward_conversion() {
        assert_eq!(cost_to_reward(0.0).unwrap(), 1.0);
        assert_eq!(cost_to_reward(1.0).unwrap(), 0.0);
        assert!((cost_to_reward(0.3).unwrap() - 0.7).abs() < 1e-15);
        assert!(cost_to_reward(1.2).is_err());
        assert!(cost_to_reward(-0.1).is_err());
    }

    #[test]
    fn min_cost_examples() {
        let c = CostVector::new(vec![0.4, 0.1, 0.9]).unwrap();
        assert_eq!(min_cost(&arms(&[0, 2]), &c).unwrap(), 0.4);
        assert_eq!(min_cost(&arms(&[1]), &c).unwrap(), 0.1);
        assert_eq!(min_cost(&arms(&[0, 1, 2]), &c).unwrap(), 0.1);
        assert!(matches!(min_cost(&[], &c), Err(Error::EmptySelection)));
        assert!(min_cost(&arms(&[3]), &c).is_err());
    }

    #[test]
    fn beta_moment_examples() {
        let p = beta_from_moments(0.4, 0.01).unwrap();
        assert!((p.alpha - 9.2).abs() < 1e-12 && (p.beta - 13.8).abs() < 1e-12);
        let p = beta_from_moments(0.5, 0.125).unwrap();
        assert!((p.alpha - 0.5).abs() < 1e-12 && (p.beta - 0.5).abs() < 1e-12);
        let err = beta_from_moments(0.5, 0.25).unwrap_err();
        assert!(err.to_string().contains("mean(1-mean) = 0.25"), "{err}");
    }

    #[test]
    fn beta_moments_reproduced_by_sampling() {
        let mut rng = rng_from_seed(11);
        for &(mean, var) in &[(0.4, 0.01), (0.8, 0.01), (0.5, 0.05)] {
            let p = beta_from_moments(mean, var).unwrap();
            let dist = Beta::new(p.alpha, p.beta).unwrap();
            let n = 100_000;
            let xs: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!((m - mean).abs() < 0.01, "mean {m} vs {mean}");
            assert!((v - var).abs() < 0.005, "var {v} vs {var}");
        }
    }

    #[test]
    fn exponential_mean() {
        let mut rng = rng_from_seed(3);
        let n = 200_000;
        let mean = (0..n).map(|_| exponential(&mut rng, 0.5)).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn selection_validation() {
        assert!(Selection::new(arms(&[0, 2]), 3).is_ok());
        assert!(matches!(Selection::new(vec![], 3), Err(Error::EmptySelection)));
        assert!(matches!(Selection::new(arms(&[1, 1]), 3), Err(Error::DuplicateArm(1))));
        assert!(Selection::new(arms(&[3]), 3).is_err());
    }

    #[test]
    fn matrix_validation() {
        let m = CostMatrix::from_rows(vec![vec![0.2, 0.5], vec![0.8, 0.1]]).unwrap();
        assert_eq!(m.row(1), &[0.8, 0.1]);
        assert_eq!(m.column_sums(), vec![1.0, 0.6]);
        assert!(matches!(
            CostMatrix::from_rows(vec![vec![0.2, 0.5], vec![0.8]]),
            Err(Error::RaggedRow { row: 2, .. })
        ));
        assert!(matches!(
            CostMatrix::from_rows(vec![vec![0.2, 1.5]]),
            Err(Error::CellOutOfRange { row: 1, column: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn reward_conversion_is_an_involution(x in 0.0f64..=1.0) {
            let twice = cost_to_reward(cost_to_reward(x).unwrap()).unwrap();
            prop_assert!((twice - x).abs() <= f64::EPSILON);
        }

        #[test]
        fn min_cost_is_attained_lower_bound(
            costs in prop::collection::vec(0.0f64..=1.0, 1..12),
            mask in prop::collection::vec(any::<bool>(), 12),
        ) {
            let n = costs.len();
            let mut sel: Vec<ArmId> = (0..n).filter(|&i| mask[i]).map(ArmId).collect();
            if sel.is_empty() { sel.push(ArmId(0)); }
            let c = CostVector::new(costs).unwrap();
            let m = min_cost(&sel, &c).unwrap();
            prop_assert!(sel.iter().all(|&a| m <= c.get(a)));
            prop_assert!(sel.iter().any(|&a| m == c.get(a)));
        }
    }
}
