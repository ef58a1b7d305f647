//! Fast invariant suites runnable from the command line.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::Rng;

use crate::domain::{rng_from_seed, ArmId, CostMatrix, Selection};
use crate::error::{Error, Result};
use crate::hindsight::{best_fixed_subset, greedy_subset, top_k_arms};
use crate::policies::{escape_event, geometric_resample_count, Fpml};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemma1,
    Selection,
    Estimator,
    Hindsight,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Lemma1, Suite::Selection, Suite::Estimator, Suite::Hindsight];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Lemma1 => "lemma1",
            Suite::Selection => "selection",
            Suite::Estimator => "estimator",
            Suite::Hindsight => "hindsight",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.to_string() == s.trim())
            .ok_or_else(|| Error::param(format!("unknown suite {s:?}; expected lemma1, selection, estimator or hindsight")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub detail: String,
}

/// Zero-noise leaders run over `rows`: final single-arm regret, escape
/// count, and whether every round's regret increment was at most the
/// round's escape indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeCheck {
    pub regret: f64,
    pub escapes: usize,
    pub increments_bounded: bool,
}

pub fn ftml_escape_check(rows: &[Vec<f64>], budget: usize) -> Result<EscapeCheck> {
    let n = rows.first().ok_or(Error::EmptyInput)?.len();
    let mut state = Fpml::new(n, budget, 1.0)?;
    let zeros = vec![0.0; n];
    let mut paid = 0.0;
    let mut prev_regret = 0.0;
    let mut escapes = 0;
    let mut bounded = true;
    for row in rows {
        let sel = state.leaders();
        paid += sel.arms().iter().map(|a| row[a.0]).fold(f64::INFINITY, f64::min);
        state.update(row)?;
        let escaped = escape_event(state.cumulative_costs(), &zeros, &sel);
        escapes += escaped as usize;
        let best = state.cumulative_costs().iter().copied().fold(f64::INFINITY, f64::min);
        let regret = paid - best;
        if regret - prev_regret > escaped as u8 as f64 + 1e-12 {
            bounded = false;
        }
        prev_regret = regret;
    }
    Ok(EscapeCheck {
        regret: prev_regret,
        escapes,
        increments_bounded: bounded,
    })
}

fn lemma1(_seed: u64) -> Result<SuiteReport> {
    // Every sequence over {0, 1/2, 1} for 3 arms and 3 rounds, budgets 1 and 2.
    let levels = [0.0, 0.5, 1.0];
    let (n, t) = (3, 3);
    let mut checked = 0;
    let mut violations = 0;
    for cells in std::iter::repeat_n(levels.iter().copied(), n * t).multi_cartesian_product() {
        let rows: Vec<Vec<f64>> = cells.chunks(n).map(<[f64]>::to_vec).collect();
        for b in 1..=2 {
            let c = ftml_escape_check(&rows, b)?;
            checked += 1;
            if c.regret > c.escapes as f64 + 1e-12 || !c.increments_bounded {
                violations += 1;
            }
        }
    }
    Ok(SuiteReport {
        suite: Suite::Lemma1,
        passed: violations == 0,
        detail: format!("{checked} sequences, {violations} violations"),
    })
}

fn selection(seed: u64) -> Result<SuiteReport> {
    let mut rng = rng_from_seed(seed);
    let mut failures = 0;
    let cases = 2000;
    for _ in 0..cases {
        let n = rng.random_range(1..=12);
        let b = rng.random_range(1..=n);
        let eps = rng.random_range(0.01..5.0);
        let mut state = Fpml::new(n, b, eps)?;
        let costs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..20.0)).collect();
        state.set_cumulative_costs(costs.clone())?;
        let (sel, p) = state.select_recording(&mut rng);
        let valid = Selection::new(sel.arms().to_vec(), n).is_ok() && sel.len() == b;
        let perturbed: Vec<f64> = costs.iter().zip(&p).map(|(c, p)| c - p).collect();
        let ranked = sel.arms().windows(2).all(|w| perturbed[w[0].0] <= perturbed[w[1].0]);
        let worst_in = sel.arms().iter().map(|a| perturbed[a.0]).fold(f64::NEG_INFINITY, f64::max);
        let dominated = (0..n)
            .filter(|a| !sel.contains(ArmId(*a)))
            .all(|a| perturbed[a] >= worst_in);
        let mut shifted = state.clone();
        shifted.set_cumulative_costs(costs.iter().map(|c| c + 8.0).collect())?;
        let same = shifted.select_with_perturbation(&p) == sel;
        if !(valid && ranked && dominated && same) {
            failures += 1;
        }
    }
    Ok(SuiteReport {
        suite: Suite::Selection,
        passed: failures == 0,
        detail: format!("{cases} random selections, {failures} failures"),
    })
}

fn estimator(seed: u64) -> Result<SuiteReport> {
    // Two tied arms with B = 1 are pulled with probability 1/2 each.
    let mut rng = rng_from_seed(seed);
    let state = Fpml::new(2, 1, 1.0)?;
    let q: f64 = 0.5;
    let draws = 20_000;
    let mut worst_z: f64 = 0.0;
    for cap in [1u32, 3, 5] {
        let xs: Vec<f64> = (0..draws)
            .map(|_| geometric_resample_count(&state, ArmId(0), &mut rng, cap).map(f64::from))
            .collect::<Result<_>>()?;
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let expect = (1.0 - (1.0 - q).powi(cap as i32)) / q;
        let se = (var / draws as f64).sqrt();
        let z = if se > 0.0 { (mean - expect).abs() / se } else if mean == expect { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
    }
    Ok(SuiteReport {
        suite: Suite::Estimator,
        passed: worst_z <= 3.0,
        detail: format!("largest deviation {worst_z:.2} standard errors"),
    })
}

fn hindsight(seed: u64) -> Result<SuiteReport> {
    let mut rng = rng_from_seed(seed);
    let mut failures = 0;
    let cases = 200;
    for _ in 0..cases {
        let n = rng.random_range(2..=7);
        let t = rng.random_range(1..=15);
        let rows = (0..t).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
        let m = CostMatrix::from_rows(rows)?;
        let b = rng.random_range(1..n);
        let best = best_fixed_subset(&m, b)?;
        let greedy = greedy_subset(&m, b)?;
        let top = top_k_arms(&m, b)?;
        let next = best_fixed_subset(&m, b + 1)?;
        let ok = best.value <= greedy.value + 1e-12
            && best.value <= top.value + 1e-12
            && next.value <= best.value + 1e-12
            && [&best, &greedy, &top].iter().all(|r| (r.value - m.subset_cost(&r.arms)).abs() < 1e-9);
        if !ok {
            failures += 1;
        }
    }
    Ok(SuiteReport {
        suite: Suite::Hindsight,
        passed: failures == 0,
        detail: format!("{cases} random matrices, {failures} failures"),
    })
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    match suite {
        Suite::Lemma1 => lemma1(seed),
        Suite::Selection => selection(seed),
        Suite::Estimator => estimator(seed),
        Suite::Hindsight => hindsight(seed),
    }
}
