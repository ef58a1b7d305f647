//! Cost-generating processes: adversarial constructions, stochastic
//! baselines, the synthetic tasks, and replay of recorded cost matrices.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::domain::{beta_from_moments, bernoulli, check_unit, CostMatrix, CostVector, Selection};
use crate::error::{Error, Result};
use crate::osfm::CoverageJob;

/// Independent Bernoulli costs, one mean per arm.
pub fn bernoulli_env<R: Rng + ?Sized>(means: &[f64], n_rounds: usize, rng: &mut R) -> Result<CostMatrix> {
    if means.is_empty() {
        return Err(Error::EmptyInput);
    }
    for &m in means {
        check_unit("Bernoulli mean", m)?;
    }
    let rows = (0..n_rounds)
        .map(|_| means.iter().map(|&p| bernoulli(rng, p)).collect())
        .collect();
    CostMatrix::from_rows(rows)
}

fn beta(mean: f64, variance: f64) -> Beta<f64> {
    let p = beta_from_moments(mean, variance).expect("fixed task moments are feasible");
    Beta::new(p.alpha, p.beta).expect("positive shapes")
}

/// 15 arms in three groups of five. Each round is type A or B with equal
/// odds: the first two groups draw Beta costs (means 0.4 and 0.6) on A and
/// cost 1 on B; the last group costs 1 on A and draws Beta (mean 0.8) on B.
/// All Beta draws have variance 0.01.
pub fn synthetic_task1<R: Rng + ?Sized>(n_rounds: usize, rng: &mut R) -> Result<CostMatrix> {
    let dists = [beta(0.4, 0.01), beta(0.6, 0.01), beta(0.8, 0.01)];
    let rows = (0..n_rounds)
        .map(|_| {
            let type_a = rng.random::<f64>() < 0.5;
            (0..15)
                .map(|a| {
                    let group = a / 5;
                    let active = if group < 2 { type_a } else { !type_a };
                    if active {
                        dists[group].sample(rng)
                    } else {
                        1.0
                    }
                })
                .collect()
        })
        .collect();
    CostMatrix::from_rows(rows)
}

/// 10 arms with Beta costs of mean `0.40 + 0.05 i` and variance 0.01.
pub fn synthetic_task2<R: Rng + ?Sized>(n_rounds: usize, rng: &mut R) -> Result<CostMatrix> {
    let dists: Vec<Beta<f64>> = (0..10).map(|i| beta(0.40 + 0.05 * i as f64, 0.01)).collect();
    let rows = (0..n_rounds)
        .map(|_| dists.iter().map(|d| d.sample(rng)).collect())
        .collect();
    CostMatrix::from_rows(rows)
}

/// Four arms with period-4 deterministic costs:
///
/// | arm | rounds 1-4 |
/// |-----|------------|
/// | 1 | 1-δ, 1-δ, 0, 0 |
/// | 2 | 1/2-δ, 1/2-δ, 1, 1 |
/// | 3 | 0, 1, 0, 1 |
/// | 4 | 1, 0, 1, 0 |
pub fn synthetic_task3(delta: f64, n_rounds: usize) -> Result<CostMatrix> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::OutOfRange {
            what: "delta",
            value: delta,
            range: "(0, 1/2)",
        });
    }
    let period = [
        [1.0 - delta, 0.5 - delta, 0.0, 1.0],
        [1.0 - delta, 0.5 - delta, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [0.0, 1.0, 1.0, 0.0],
    ];
    CostMatrix::from_rows((0..n_rounds).map(|t| period[t % 4].to_vec()).collect())
}

/// Nested random halving: `A_t` is a uniformly random subset of `A_{t-1}`
/// of size `max(2^(k-t), 1)`; arms in `A_t` cost 0, the rest cost 1. When
/// `N` is not a power of two only the first `2^k` arms take part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalvingAdversary {
    n_arms: usize,
    k: u32,
}

impl HalvingAdversary {
    pub fn new(n_arms: usize) -> Result<Self> {
        if n_arms < 2 {
            return Err(Error::param(format!(
                "halving adversary needs at least 2 arms, got {n_arms}"
            )));
        }
        Ok(HalvingAdversary {
            n_arms,
            k: n_arms.ilog2(),
        })
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `floor(k - log2 B - log2(3/2))`, the horizon at which every policy
    /// pays a constant fraction of `T` while the best arm pays 0.
    pub fn recommended_horizon(&self, budget: usize) -> Result<usize> {
        if budget == 0 || budget > self.n_arms {
            return Err(Error::BudgetOutOfRange {
                budget,
                n_arms: self.n_arms,
            });
        }
        let t = (self.k as f64 - (budget as f64).log2() - 1.5f64.log2()).floor();
        if t < 1.0 {
            return Err(Error::param(format!(
                "no positive horizon for {} arms and budget {budget}",
                self.n_arms
            )));
        }
        Ok(t as usize)
    }

    /// The surviving sets `A_1, ..., A_T`.
    pub fn sample_sets<R: Rng + ?Sized>(&self, n_rounds: usize, rng: &mut R) -> Vec<Vec<usize>> {
        let mut current: Vec<usize> = (0..1usize << self.k).collect();
        let mut sets = Vec::with_capacity(n_rounds);
        for t in 1..=n_rounds {
            let size = if t as u32 >= self.k { 1 } else { 1usize << (self.k - t as u32) };
            current.shuffle(rng);
            current.truncate(size);
            current.sort_unstable();
            sets.push(current.clone());
        }
        sets
    }

    pub fn costs_from_sets(&self, sets: &[Vec<usize>]) -> Result<CostMatrix> {
        let rows = sets
            .iter()
            .map(|s| {
                let mut row = vec![1.0; self.n_arms];
                for &a in s {
                    row[a] = 0.0;
                }
                row
            })
            .collect();
        CostMatrix::from_rows(rows)
    }

    pub fn generate<R: Rng + ?Sized>(&self, n_rounds: usize, rng: &mut R) -> Result<CostMatrix> {
        let sets = self.sample_sets(n_rounds, rng);
        self.costs_from_sets(&sets)
    }
}

/// Adaptive adversary that charges 1 to every pulled arm and 0 elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterministicAdversary {
    n_arms: usize,
}

impl DeterministicAdversary {
    pub fn new(n_arms: usize) -> Result<Self> {
        if n_arms == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(DeterministicAdversary { n_arms })
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn respond(&self, selection: &Selection) -> Result<CostVector> {
        let mut row = vec![0.0; self.n_arms];
        for a in selection.arms() {
            if a.0 >= self.n_arms {
                return Err(Error::InvalidArm {
                    index: a.0,
                    n_arms: self.n_arms,
                });
            }
            row[a.0] = 1.0;
        }
        CostVector::new(row)
    }
}

/// Random weighted-coverage jobs: each round draws element weights summing
/// to 1 and lets every arm cover each element independently with
/// probability `density`.
pub fn coverage_env<R: Rng + ?Sized>(
    n_arms: usize,
    n_elements: usize,
    density: f64,
    n_rounds: usize,
    rng: &mut R,
) -> Result<Vec<CoverageJob>> {
    if n_arms == 0 || n_elements == 0 {
        return Err(Error::EmptyInput);
    }
    check_unit("coverage density", density)?;
    (0..n_rounds)
        .map(|_| {
            let raw: Vec<f64> = (0..n_elements).map(|_| rng.random::<f64>() + 1e-12).collect();
            let total: f64 = raw.iter().sum();
            let weights = raw.iter().map(|w| w / total * (1.0 - 1e-12)).collect();
            let covers = (0..n_arms)
                .map(|_| (0..n_elements).filter(|_| rng.random::<f64>() < density).collect())
                .collect();
            CoverageJob::new(weights, covers)
        })
        .collect()
}

/// Parses a cost (or, with `rewards`, reward) matrix: one round per line,
/// comma-separated decimal cells, an optional first line starting with `#`.
pub fn parse_cost_csv(text: &str, rewards: bool) -> Result<CostMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || (i == 0 && trimmed.starts_with('#')) {
            continue;
        }
        let row = trimmed
            .split(',')
            .enumerate()
            .map(|(j, cell)| {
                cell.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    message: format!("column {}: {e} ({:?})", j + 1, cell.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let m = CostMatrix::from_rows(rows)?;
    if !rewards {
        return Ok(m);
    }
    CostMatrix::from_rows(m.rows().map(|r| r.iter().map(|v| 1.0 - v).collect()).collect())
}

pub fn read_cost_csv(path: &Path, rewards: bool) -> Result<CostMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cost_csv(&text, rewards)
}

pub fn format_cost_csv(m: &CostMatrix) -> String {
    let mut out = String::new();
    for row in m.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn write_cost_csv(m: &CostMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, format_cost_csv(m)).map_err(|e| Error::io(path, e))
}

/// Environment kind and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvSpec {
    Bernoulli { means: Vec<f64> },
    Task1,
    Task2,
    Task3 { delta: f64 },
    Halving { n_arms: usize },
    DeterministicAdversary { n_arms: usize },
    Replay { path: PathBuf, rewards: bool },
    Coverage { n_arms: usize, n_elements: usize, density: f64 },
}

/// A realized environment for one trial.
#[derive(Debug, Clone)]
pub enum Environment {
    /// Cost sequence fixed before the trial starts.
    Oblivious(CostMatrix),
    /// Costs emitted after seeing each round's selection.
    Adaptive(DeterministicAdversary),
    /// One job per round.
    Jobs(Vec<CoverageJob>),
}

impl EnvSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::Bernoulli { .. } => "bernoulli",
            EnvSpec::Task1 => "task1",
            EnvSpec::Task2 => "task2",
            EnvSpec::Task3 { .. } => "task3",
            EnvSpec::Halving { .. } => "halving",
            EnvSpec::DeterministicAdversary { .. } => "adversary",
            EnvSpec::Replay { .. } => "replay",
            EnvSpec::Coverage { .. } => "coverage",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvSpec::Bernoulli { means } => {
                if means.is_empty() {
                    return Err(Error::param("bernoulli environment needs at least one mean"));
                }
                means.iter().try_for_each(|&m| check_unit("Bernoulli mean", m))
            }
            EnvSpec::Task3 { delta } => synthetic_task3(*delta, 1).map(|_| ()),
            EnvSpec::Halving { n_arms } => HalvingAdversary::new(*n_arms).map(|_| ()),
            EnvSpec::DeterministicAdversary { n_arms } => DeterministicAdversary::new(*n_arms).map(|_| ()),
            EnvSpec::Coverage { n_arms, n_elements, density } => {
                if *n_arms == 0 || *n_elements == 0 {
                    return Err(Error::param("coverage environment needs arms and elements"));
                }
                check_unit("coverage density", *density)
            }
            EnvSpec::Task1 | EnvSpec::Task2 | EnvSpec::Replay { .. } => Ok(()),
        }
    }

    /// Arm count; replay specs read their file.
    pub fn n_arms(&self) -> Result<usize> {
        Ok(match self {
            EnvSpec::Bernoulli { means } => means.len(),
            EnvSpec::Task1 => 15,
            EnvSpec::Task2 => 10,
            EnvSpec::Task3 { .. } => 4,
            EnvSpec::Halving { n_arms }
            | EnvSpec::DeterministicAdversary { n_arms }
            | EnvSpec::Coverage { n_arms, .. } => *n_arms,
            EnvSpec::Replay { path, rewards } => read_cost_csv(path, *rewards)?.n_arms(),
        })
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, EnvSpec::DeterministicAdversary { .. })
    }

    pub fn is_job_sequence(&self) -> bool {
        matches!(self, EnvSpec::Coverage { .. })
    }

    /// Builds one trial's environment of `n_rounds` rounds.
    pub fn build<R: Rng + ?Sized>(&self, n_rounds: usize, rng: &mut R) -> Result<Environment> {
        self.validate()?;
        if n_rounds == 0 {
            return Err(Error::param("rounds T must be at least 1"));
        }
        Ok(match self {
            EnvSpec::Bernoulli { means } => Environment::Oblivious(bernoulli_env(means, n_rounds, rng)?),
            EnvSpec::Task1 => Environment::Oblivious(synthetic_task1(n_rounds, rng)?),
            EnvSpec::Task2 => Environment::Oblivious(synthetic_task2(n_rounds, rng)?),
            EnvSpec::Task3 { delta } => Environment::Oblivious(synthetic_task3(*delta, n_rounds)?),
            EnvSpec::Halving { n_arms } => {
                Environment::Oblivious(HalvingAdversary::new(*n_arms)?.generate(n_rounds, rng)?)
            }
            EnvSpec::DeterministicAdversary { n_arms } => {
                Environment::Adaptive(DeterministicAdversary::new(*n_arms)?)
            }
            EnvSpec::Replay { path, rewards } => {
                let m = read_cost_csv(path, *rewards)?;
                if n_rounds > m.n_rounds() {
                    return Err(Error::param(format!(
                        "{} holds {} rounds but {n_rounds} were requested",
                        path.display(),
                        m.n_rounds()
                    )));
                }
                Environment::Oblivious(m.truncated(n_rounds)?)
            }
            EnvSpec::Coverage { n_arms, n_elements, density } => {
                Environment::Jobs(coverage_env(*n_arms, *n_elements, *density, n_rounds, rng)?)
            }
        })
    }
}
