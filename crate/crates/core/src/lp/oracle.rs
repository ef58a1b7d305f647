use rand::Rng;
use serde::{Deserialize, Serialize};

use super::instance::LpInstance;
use crate::error::{Error, Result};

/// Empirical joint distribution over ordered `B`-tuples of constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmDistribution {
    n: usize,
    samples: Vec<Vec<usize>>,
}

impl ArmDistribution {
    pub fn new(n: usize, samples: Vec<Vec<usize>>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyInput)?;
        let width = first.len();
        if width == 0 {
            return Err(Error::EmptySelection);
        }
        for s in &samples {
            if s.len() != width {
                return Err(Error::LengthMismatch {
                    what: "sample tuple",
                    expected: width,
                    got: s.len(),
                });
            }
            if let Some(&i) = s.iter().find(|i| **i >= n) {
                return Err(Error::InvalidArm { index: i, n_arms: n });
            }
        }
        Ok(ArmDistribution { n, samples })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn budget(&self) -> usize {
        self.samples[0].len()
    }

    pub fn samples(&self) -> &[Vec<usize>] {
        &self.samples
    }

    /// Frequency with which each constraint appears in a tuple.
    pub fn marginal(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.n];
        for s in &self.samples {
            for &i in s {
                counts[i] += 1.0;
            }
        }
        let total = self.samples.len() as f64;
        counts.iter_mut().for_each(|c| *c /= total);
        counts
    }

    /// Empirical `E[min_{i in tuple} slack_i]`.
    pub fn expected_min(&self, slacks: &[f64]) -> f64 {
        self.samples
            .iter()
            .map(|s| s.iter().map(|&i| slacks[i]).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / self.samples.len() as f64
    }
}

/// What an oracle returned for one distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleAnswer {
    Point(Vec<f64>),
    /// Proven: no point of the box makes the expected slack non-negative.
    Infeasible,
    /// The heuristic search ran out of budget.
    GaveUp,
}

/// Exact oracle for `B = 1` over a box: maximizes `d^T (A x - b)`
/// coordinate-wise, putting zero-coefficient coordinates at their lower
/// bound.
pub fn oracle_box_b1(d: &ArmDistribution, inst: &LpInstance) -> Result<OracleAnswer> {
    if d.budget() != 1 {
        return Err(Error::Unsupported(format!(
            "the exact box oracle needs single-constraint tuples, got width {}",
            d.budget()
        )));
    }
    if d.n() != inst.n_constraints() {
        return Err(Error::LengthMismatch {
            what: "distribution support",
            expected: inst.n_constraints(),
            got: d.n(),
        });
    }
    let weights = d.marginal();
    let mut coef = vec![0.0; inst.dim()];
    let mut offset = 0.0;
    for ((w, row), b) in weights.iter().zip(inst.a()).zip(inst.b()) {
        if *w == 0.0 {
            continue;
        }
        for (c, a) in coef.iter_mut().zip(row) {
            *c += w * a;
        }
        offset += w * b;
    }
    let x: Vec<f64> = coef
        .iter()
        .enumerate()
        .map(|(j, c)| if *c > 0.0 { inst.upper()[j] } else { inst.lower()[j] })
        .collect();
    let value: f64 = coef.iter().zip(&x).map(|(c, x)| c * x).sum::<f64>() - offset;
    Ok(if value >= 0.0 {
        OracleAnswer::Point(x)
    } else {
        OracleAnswer::Infeasible
    })
}

/// Reference search oracle for any tuple width: tries every box vertex
/// when there are at most `search_budget` of them, then uniform random
/// points until `search_budget` candidates in total, and returns the first
/// point whose empirical expected minimum slack is non-negative.
pub fn oracle_search<R: Rng + ?Sized>(
    d: &ArmDistribution,
    inst: &LpInstance,
    search_budget: usize,
    rng: &mut R,
) -> Result<OracleAnswer> {
    if search_budget == 0 {
        return Err(Error::param("search budget must be at least 1"));
    }
    if d.n() != inst.n_constraints() {
        return Err(Error::LengthMismatch {
            what: "distribution support",
            expected: inst.n_constraints(),
            got: d.n(),
        });
    }
    let m = inst.dim();
    let accept = |x: &[f64]| d.expected_min(&inst.slacks(x)) >= 0.0;
    let mut tried = 0;
    if m < usize::BITS as usize && (1usize << m) <= search_budget {
        for mask in 0..(1usize << m) {
            let x: Vec<f64> = (0..m)
                .map(|j| if mask >> j & 1 == 1 { inst.upper()[j] } else { inst.lower()[j] })
                .collect();
            tried += 1;
            if accept(&x) {
                return Ok(OracleAnswer::Point(x));
            }
        }
    }
    while tried < search_budget {
        let x: Vec<f64> = (0..m)
            .map(|j| {
                let (l, u) = (inst.lower()[j], inst.upper()[j]);
                l + (u - l) * rng.random::<f64>()
            })
            .collect();
        tried += 1;
        if accept(&x) {
            return Ok(OracleAnswer::Point(x));
        }
    }
    Ok(OracleAnswer::GaveUp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::rng_from_seed;

    fn identity2(b: [f64; 2]) -> LpInstance {
        LpInstance::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            b.to_vec(),
            vec![-1.0; 2],
            vec![1.0; 2],
            None,
        )
        .unwrap()
    }

    fn uniform() -> ArmDistribution {
        ArmDistribution::new(2, vec![vec![0], vec![1]]).unwrap()
    }

    #[test]
    fn exact_box_examples() {
        assert_eq!(
            oracle_box_b1(&uniform(), &identity2([0.0, 0.0])).unwrap(),
            OracleAnswer::Point(vec![1.0, 1.0])
        );
        assert_eq!(
            oracle_box_b1(&uniform(), &identity2([2.0, 2.0])).unwrap(),
            OracleAnswer::Infeasible
        );
        let point = ArmDistribution::new(2, vec![vec![1]]).unwrap();
        // Coordinate 0 has zero coefficient and sits at its lower bound.
        assert_eq!(
            oracle_box_b1(&point, &identity2([0.5, 0.5])).unwrap(),
            OracleAnswer::Point(vec![-1.0, 1.0])
        );
        let wide = ArmDistribution::new(2, vec![vec![0, 1]]).unwrap();
        assert!(oracle_box_b1(&wide, &identity2([0.0, 0.0])).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(ArmDistribution::new(2, vec![]).is_err());
        assert!(ArmDistribution::new(2, vec![vec![2]]).is_err());
        assert!(ArmDistribution::new(3, vec![vec![0, 1], vec![2]]).is_err());
        let d = ArmDistribution::new(3, vec![vec![0, 1], vec![2, 1]]).unwrap();
        assert_eq!(d.marginal(), vec![0.5, 1.0, 0.5]);
        assert_eq!(d.expected_min(&[1.0, 0.0, -2.0]), -1.0);
    }

    #[test]
    fn search_agrees_with_exact_on_vertices() {
        let mut rng = rng_from_seed(3);
        for b in [[0.0, 0.0], [0.9, -0.5], [2.0, 2.0], [1.0, 1.0]] {
            let inst = identity2(b);
            let exact = oracle_box_b1(&uniform(), &inst).unwrap();
            let search = oracle_search(&uniform(), &inst, 4, &mut rng).unwrap();
            assert_eq!(
                matches!(exact, OracleAnswer::Point(_)),
                matches!(search, OracleAnswer::Point(_)),
                "{b:?}"
            );
        }
        assert!(oracle_search(&uniform(), &identity2([0.0, 0.0]), 0, &mut rng).is_err());
    }
}
