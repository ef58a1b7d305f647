use rand::Rng;
use serde::{Deserialize, Serialize};

use super::instance::LpInstance;
use super::oracle::{oracle_box_b1, oracle_search, ArmDistribution, OracleAnswer};
use crate::error::{Error, Result};
use crate::policies::{theoretical_epsilon_full, Fpml};

/// Which oracle the solver queries each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleKind {
    /// Exact box oracle, single-constraint tuples only.
    ExactBox,
    /// Vertex and random-point search with this many candidates.
    Search { budget: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FeasibilityOutcome {
    /// Average of the oracle's points, with `A_i x - b_i` per constraint.
    Feasible {
        x: Vec<f64>,
        slacks: Vec<f64>,
        rounds: usize,
    },
    /// The exact oracle proved infeasibility in this (1-based) round.
    Infeasible { round: usize },
    /// The search oracle found no point in this round; not a certificate.
    Undetermined { round: usize },
}

impl FeasibilityOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            FeasibilityOutcome::Feasible { .. } => "feasible",
            FeasibilityOutcome::Infeasible { .. } => "infeasible",
            FeasibilityOutcome::Undetermined { .. } => "undetermined",
        }
    }

    pub fn min_slack(&self) -> Option<f64> {
        match self {
            FeasibilityOutcome::Feasible { slacks, .. } => Some(slacks.iter().copied().fold(f64::INFINITY, f64::min)),
            _ => None,
        }
    }

    pub fn rounds(&self) -> usize {
        match self {
            FeasibilityOutcome::Feasible { rounds, .. } => *rounds,
            FeasibilityOutcome::Infeasible { round } | FeasibilityOutcome::Undetermined { round } => *round,
        }
    }
}

/// `S` independent selections under the current cumulative costs, each as
/// an ordered tuple of constraint indices.
pub fn fpml_distribution<R: Rng + ?Sized>(
    state: &Fpml,
    n_samples: usize,
    rng: &mut R,
) -> Result<ArmDistribution> {
    if n_samples == 0 {
        return Err(Error::param("need at least one sample"));
    }
    let samples = (0..n_samples)
        .map(|_| state.select(rng).arms().iter().map(|a| a.0).collect())
        .collect();
    ArmDistribution::new(state.n_arms(), samples)
}

/// Round count `ceil((4 rho / eps)^((B+1)/B) (1 + ln n))`.
pub fn lp_iterations(epsilon: f64, rho: f64, budget: usize, n: usize) -> Result<usize> {
    if !(epsilon > 0.0) || !(rho > 0.0) || budget == 0 || n == 0 {
        return Err(Error::param("need epsilon > 0, rho > 0, B >= 1 and n >= 1"));
    }
    let exponent = (budget as f64 + 1.0) / budget as f64;
    let t = (4.0 * rho / epsilon).powf(exponent) * (1.0 + (n as f64).ln());
    Ok(t.ceil() as usize)
}

/// Multiplicative-weights feasibility search with perturbed leaders over
/// the constraints. Each round the oracle answers the sampled constraint
/// distribution and every constraint is charged `(A_i x - b_i + rho) / (2 rho)`.
pub fn lp_feasibility_solve<R: Rng + ?Sized>(
    inst: &LpInstance,
    epsilon: f64,
    budget: usize,
    oracle: OracleKind,
    n_samples: usize,
    rng: &mut R,
) -> Result<FeasibilityOutcome> {
    let n = inst.n_constraints();
    if budget == 0 || budget > n {
        return Err(Error::BudgetOutOfRange { budget, n_arms: n });
    }
    if budget > 1 && oracle == OracleKind::ExactBox {
        return Err(Error::Unsupported(
            "the exact box oracle only handles B = 1; use the search oracle".into(),
        ));
    }
    let rho = inst.rho();
    let horizon = lp_iterations(epsilon, rho, budget, n)?;
    let rate = if n >= 2 {
        theoretical_epsilon_full(horizon, n, budget)?
    } else {
        1.0
    };
    let mut fpml = Fpml::new(n, budget, rate)?;
    let mut x_sum = vec![0.0; inst.dim()];
    let mut costs = vec![0.0; n];
    for round in 1..=horizon {
        let d = fpml_distribution(&fpml, n_samples, rng)?;
        let answer = match oracle {
            OracleKind::ExactBox => oracle_box_b1(&d, inst)?,
            OracleKind::Search { budget } => oracle_search(&d, inst, budget, rng)?,
        };
        let x = match answer {
            OracleAnswer::Point(x) => x,
            OracleAnswer::Infeasible => return Ok(FeasibilityOutcome::Infeasible { round }),
            OracleAnswer::GaveUp => return Ok(FeasibilityOutcome::Undetermined { round }),
        };
        if !inst.contains(&x) {
            return Err(Error::ContractViolation(format!(
                "oracle returned a point outside the box in round {round}"
            )));
        }
        for (c, s) in costs.iter_mut().zip(inst.slacks(&x)) {
            let v = (s + rho) / (2.0 * rho);
            if !(-1e-9..=1.0 + 1e-9).contains(&v) {
                return Err(Error::ContractViolation(format!(
                    "slack {s} in round {round} exceeds rho = {rho}"
                )));
            }
            *c = v.clamp(0.0, 1.0);
        }
        fpml.update(&costs)?;
        for (acc, v) in x_sum.iter_mut().zip(&x) {
            *acc += v;
        }
    }
    let x: Vec<f64> = inst
        .lower()
        .iter()
        .zip(inst.upper())
        .zip(&x_sum)
        .map(|((l, u), s)| (s / horizon as f64).clamp(*l, *u))
        .collect();
    Ok(FeasibilityOutcome::Feasible {
        slacks: inst.slacks(&x),
        x,
        rounds: horizon,
    })
}
