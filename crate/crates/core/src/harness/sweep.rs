use std::fmt::Write as _;

use itertools::Itertools;

use super::run::{run_experiment, Summary};
use super::spec::{ExperimentSpec, PolicySpec};
use crate::error::{Error, Result};

/// One `(policy, B)` cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub policy: PolicySpec,
    pub budget: usize,
    /// `None` when the combination is invalid, e.g. an indivisible budget.
    pub summary: Option<Summary>,
    pub reason: Option<String>,
}

/// Runs every distinct `(policy, B)` combination on top of `base`. Invalid
/// combinations become empty cells; runtime failures abort.
pub fn run_sweep(
    base: &ExperimentSpec,
    policies: &[PolicySpec],
    budgets: &[usize],
    workers: usize,
) -> Result<Vec<SweepCell>> {
    let combos: Vec<(PolicySpec, usize)> = policies
        .iter()
        .copied()
        .cartesian_product(budgets.iter().copied())
        .unique()
        .collect();
    let mut cells = Vec::with_capacity(combos.len());
    for (policy, budget) in combos {
        let mut spec = base.clone();
        spec.policy = policy;
        spec.budget = budget;
        let cell = match spec.validate() {
            Err(e @ (Error::IndivisibleBudget { .. } | Error::BudgetOutOfRange { .. } | Error::Unsupported(_))) => {
                SweepCell {
                    policy,
                    budget,
                    summary: None,
                    reason: Some(e.to_string()),
                }
            }
            Err(e) => return Err(e),
            Ok(_) => SweepCell {
                policy,
                budget,
                summary: Some(run_experiment(&spec, workers)?.summary),
                reason: None,
            },
        };
        cells.push(cell);
    }
    Ok(cells)
}

pub const SWEEP_CSV_HEADER: &str = "policy,budget,box_budget,metric,mean,std";

/// Combined table keyed by `(policy, B, B_box)`; invalid cells carry
/// `invalid` in place of metric rows.
pub fn format_sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for c in cells {
        let bb = c.policy.box_budget().map(|k| k.to_string()).unwrap_or_default();
        match &c.summary {
            None => writeln!(out, "{},{},{bb},invalid,invalid,invalid", c.policy, c.budget).unwrap(),
            Some(s) => {
                for (name, m) in &s.metrics {
                    writeln!(out, "{},{},{bb},{name},{:?},{:?}", c.policy, c.budget, m.mean, m.std).unwrap();
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::EnvSpec;

    #[test]
    fn sweep_product_and_invalid_cells() {
        let mut base = ExperimentSpec::new(EnvSpec::Task2, PolicySpec::Fpml, 1, 40);
        base.trials = 2;
        let policies: Vec<PolicySpec> = ["fpml", "og", "og_hybrid:2", "fpml"]
            .iter()
            .map(|p| p.parse().unwrap())
            .collect();
        let cells = run_sweep(&base, &policies, &[1, 2, 3, 2], 1).unwrap();
        assert_eq!(cells.len(), 9);
        let invalid: Vec<usize> = cells
            .iter()
            .filter(|c| c.summary.is_none())
            .map(|c| c.budget)
            .collect();
        assert_eq!(invalid, vec![1, 3]);
        let csv = format_sweep_csv(&cells);
        assert!(csv.starts_with(SWEEP_CSV_HEADER));
        assert!(csv.contains("og_hybrid:2,3,2,invalid"));
        let per_metric = csv.lines().filter(|l| l.split(',').nth(3) == Some("mean_reward")).count();
        assert_eq!(per_metric, 7);
    }
}
