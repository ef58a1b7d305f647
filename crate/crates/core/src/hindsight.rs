//! Offline benchmarks computed from the full cost matrix after the fact.

use std::cmp::Ordering;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{ArmId, CostMatrix};
use crate::error::{Error, Result};
use crate::osfm::{Job, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkMethod {
    Best,
    Greedy,
    TopK,
    Schedule,
}

/// A hindsight comparator. For subset benchmarks `value` is the cumulative
/// min-cost; for schedule benchmarks it is the cumulative job value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub arms: Vec<ArmId>,
    pub value: f64,
    pub method: BenchmarkMethod,
}

/// Limits on exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchCap {
    pub max_arms: usize,
    pub max_candidates: f64,
}

impl Default for SearchCap {
    fn default() -> Self {
        SearchCap {
            max_arms: 25,
            max_candidates: 5e6,
        }
    }
}

/// `C(n, k)` as a float, exact for the sizes that pass the cap.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

fn check_budget(n_arms: usize, budget: usize) -> Result<()> {
    if budget == 0 || budget > n_arms {
        return Err(Error::BudgetOutOfRange { budget, n_arms });
    }
    Ok(())
}

fn columns(m: &CostMatrix) -> Vec<Vec<f64>> {
    let mut cols = vec![Vec::with_capacity(m.n_rounds()); m.n_arms()];
    for row in m.rows() {
        for (c, &v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    cols
}

fn cost_of(cols: &[Vec<f64>], subset: &[usize], scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend_from_slice(&cols[subset[0]]);
    for &a in &subset[1..] {
        for (s, &v) in scratch.iter_mut().zip(&cols[a]) {
            if v < *s {
                *s = v;
            }
        }
    }
    scratch.iter().sum()
}

/// Lower cost first, then the lexicographically smaller subset.
fn better(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1))
}

/// Exhaustive best fixed `B`-subset under the default [`SearchCap`].
pub fn best_fixed_subset(m: &CostMatrix, budget: usize) -> Result<BenchmarkResult> {
    best_fixed_subset_capped(m, budget, SearchCap::default())
}

pub fn best_fixed_subset_capped(
    m: &CostMatrix,
    budget: usize,
    cap: SearchCap,
) -> Result<BenchmarkResult> {
    let n = m.n_arms();
    check_budget(n, budget)?;
    let candidates = binomial(n, budget);
    if n > cap.max_arms {
        return Err(Error::param(format!(
            "exhaustive search over {n} arms exceeds the cap of {} arms; use the greedy benchmark instead",
            cap.max_arms
        )));
    }
    if candidates > cap.max_candidates {
        return Err(Error::EnumerationCap {
            candidates,
            cap: cap.max_candidates,
        });
    }
    let cols = columns(m);
    let best = (0..n)
        .combinations(budget)
        .par_bridge()
        .map_init(Vec::new, |scratch, subset| (cost_of(&cols, &subset, scratch), subset))
        .min_by(better)
        .expect("at least one subset");
    Ok(BenchmarkResult {
        arms: best.1.into_iter().map(ArmId).collect(),
        value: best.0,
        method: BenchmarkMethod::Best,
    })
}

/// Adds, one at a time, the arm that most lowers the cumulative min-cost.
pub fn greedy_subset(m: &CostMatrix, budget: usize) -> Result<BenchmarkResult> {
    let n = m.n_arms();
    check_budget(n, budget)?;
    let cols = columns(m);
    let mut current = vec![f64::INFINITY; m.n_rounds()];
    let mut chosen: Vec<usize> = Vec::with_capacity(budget);
    let mut value = 0.0;
    for _ in 0..budget {
        let mut best: Option<(f64, usize)> = None;
        for a in (0..n).filter(|a| !chosen.contains(a)) {
            let c: f64 = current.iter().zip(&cols[a]).map(|(x, y)| x.min(*y)).sum();
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, a));
            }
        }
        let (c, a) = best.expect("budget <= arms");
        for (x, y) in current.iter_mut().zip(&cols[a]) {
            *x = x.min(*y);
        }
        chosen.push(a);
        value = c;
    }
    Ok(BenchmarkResult {
        arms: chosen.into_iter().map(ArmId).collect(),
        value,
        method: BenchmarkMethod::Greedy,
    })
}

/// The `B` arms of smallest individual cumulative cost, scored jointly.
pub fn top_k_arms(m: &CostMatrix, budget: usize) -> Result<BenchmarkResult> {
    check_budget(m.n_arms(), budget)?;
    let sums = m.column_sums();
    let mut order: Vec<usize> = (0..m.n_arms()).collect();
    order.sort_by(|&a, &b| sums[a].total_cmp(&sums[b]).then(a.cmp(&b)));
    order.truncate(budget);
    let arms: Vec<ArmId> = order.into_iter().map(ArmId).collect();
    Ok(BenchmarkResult {
        value: m.subset_cost(&arms),
        arms,
        method: BenchmarkMethod::TopK,
    })
}

/// Best fixed schedule of length `B'` for a job sequence. Order-sensitive
/// search enumerates all `N^B'` sequences (capped at 10^6); otherwise
/// distinct subsets are enumerated in lexicographic order. Ties keep the
/// first candidate found.
pub fn best_fixed_schedule(
    jobs: &[&dyn Job],
    n_arms: usize,
    target_len: usize,
    order_sensitive: bool,
) -> Result<BenchmarkResult> {
    if target_len == 0 {
        return Ok(BenchmarkResult {
            arms: Vec::new(),
            value: 0.0,
            method: BenchmarkMethod::Schedule,
        });
    }
    if let Some(j) = jobs.iter().find(|j| j.n_arms() != n_arms) {
        return Err(Error::LengthMismatch {
            what: "job arm count",
            expected: n_arms,
            got: j.n_arms(),
        });
    }
    const CAP: f64 = 1e6;
    let candidates = if order_sensitive {
        (n_arms as f64).powi(target_len as i32)
    } else {
        check_budget(n_arms, target_len)?;
        binomial(n_arms, target_len)
    };
    if candidates > CAP {
        return Err(Error::EnumerationCap { candidates, cap: CAP });
    }
    let score = |s: &[ArmId]| -> f64 { jobs.iter().map(|j| j.value(s)).sum() };
    let candidates: Box<dyn Iterator<Item = Schedule>> = if order_sensitive {
        Box::new(
            std::iter::repeat_n((0..n_arms).map(ArmId), target_len).multi_cartesian_product(),
        )
    } else {
        Box::new((0..n_arms).map(ArmId).combinations(target_len))
    };
    let mut best: Option<(f64, Schedule)> = None;
    for s in candidates {
        let v = score(&s);
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, s));
        }
    }
    let (value, arms) = best.expect("at least one schedule");
    Ok(BenchmarkResult {
        arms,
        value,
        method: BenchmarkMethod::Schedule,
    })
}

/// Regret ceiling of the perturbed-leader policy against the top-`B` arms:
/// `(1 - 1/B + ln(N/B)) / eps + T (1 - exp(-eps B))`.
pub fn prop4_bound(n_arms: usize, budget: usize, horizon: usize, epsilon: f64) -> Result<f64> {
    check_budget(n_arms, budget)?;
    if !(epsilon > 0.0) {
        return Err(Error::OutOfRange {
            what: "epsilon",
            value: epsilon,
            range: "(0, inf)",
        });
    }
    let (n, b, t) = (n_arms as f64, budget as f64, horizon as f64);
    Ok((1.0 - 1.0 / b + (n / b).ln()) / epsilon + t * (1.0 - (-epsilon * b).exp()))
}
