use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::environments::{EnvSpec, HalvingAdversary};
use crate::error::{Error, Result};

/// Learner identifiers, one token each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PolicySpec {
    Fpml,
    FpmlPartial,
    Ftml,
    Og,
    OgHybrid { box_budget: usize },
    Hedge,
    Exp3,
    UniformRandom,
}

impl PolicySpec {
    /// Feedback used when none is configured.
    pub fn default_feedback(&self) -> FeedbackMode {
        match self {
            PolicySpec::Fpml | PolicySpec::Ftml | PolicySpec::Hedge | PolicySpec::UniformRandom => {
                FeedbackMode::Full
            }
            PolicySpec::FpmlPartial | PolicySpec::Og | PolicySpec::OgHybrid { .. } | PolicySpec::Exp3 => {
                FeedbackMode::Semi
            }
        }
    }

    pub fn supports(&self, feedback: FeedbackMode) -> bool {
        match self {
            PolicySpec::Fpml | PolicySpec::Ftml | PolicySpec::Hedge => feedback == FeedbackMode::Full,
            _ => true,
        }
    }

    /// Whether the learner builds schedules for jobs.
    pub fn is_scheduler(&self) -> bool {
        matches!(self, PolicySpec::Og | PolicySpec::OgHybrid { .. })
    }

    pub fn is_randomized(&self) -> bool {
        !matches!(self, PolicySpec::Ftml)
    }

    pub fn box_budget(&self) -> Option<usize> {
        match self {
            PolicySpec::OgHybrid { box_budget } => Some(*box_budget),
            _ => None,
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Fpml => f.write_str("fpml"),
            PolicySpec::FpmlPartial => f.write_str("fpml_partial"),
            PolicySpec::Ftml => f.write_str("ftml"),
            PolicySpec::Og => f.write_str("og"),
            PolicySpec::OgHybrid { box_budget } => write!(f, "og_hybrid:{box_budget}"),
            PolicySpec::Hedge => f.write_str("hedge"),
            PolicySpec::Exp3 => f.write_str("exp3"),
            PolicySpec::UniformRandom => f.write_str("uniform_random"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "fpml" => PolicySpec::Fpml,
            "fpml_partial" => PolicySpec::FpmlPartial,
            "ftml" => PolicySpec::Ftml,
            "og" => PolicySpec::Og,
            "hedge" => PolicySpec::Hedge,
            "exp3" => PolicySpec::Exp3,
            "uniform_random" => PolicySpec::UniformRandom,
            other => match other.strip_prefix("og_hybrid:") {
                Some(k) => {
                    let box_budget = k
                        .parse::<usize>()
                        .ok()
                        .filter(|k| *k >= 1)
                        .ok_or_else(|| Error::param(format!("og_hybrid needs a box budget >= 1, got {k:?}")))?;
                    PolicySpec::OgHybrid { box_budget }
                }
                None => {
                    return Err(Error::param(format!(
                        "unknown policy {other:?}; expected fpml, fpml_partial, ftml, og, og_hybrid:<k>, hedge, exp3 or uniform_random"
                    )))
                }
            },
        })
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    /// The whole cost vector is revealed.
    Full,
    /// Only the pulled arms' costs are revealed.
    Semi,
}

impl FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(FeedbackMode::Full),
            "semi" | "semi_bandit" | "semi-bandit" => Ok(FeedbackMode::Semi),
            other => Err(Error::param(format!("unknown feedback mode {other:?}; expected full or semi"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    Fresh,
    Frozen,
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fresh" => Ok(NoiseMode::Fresh),
            "frozen" => Ok(NoiseMode::Frozen),
            other => Err(Error::param(format!("unknown noise mode {other:?}; expected fresh or frozen"))),
        }
    }
}

/// A value that is either given or resolved from the horizon and arm count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting<T> {
    Auto,
    Fixed(T),
}

impl<T> Setting<T> {
    pub fn fixed(self) -> Option<T> {
        match self {
            Setting::Auto => None,
            Setting::Fixed(v) => Some(v),
        }
    }
}

fn parse_setting<T: FromStr>(key: &str, s: &str) -> Result<Setting<T>> {
    let s = s.trim();
    if s == "auto" {
        return Ok(Setting::Auto);
    }
    s.parse()
        .map(Setting::Fixed)
        .map_err(|_| Error::param(format!("{key}: expected a number or auto, got {s:?}")))
}

/// Hindsight comparators a trial's regret is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Benchmark {
    /// Best single arm.
    Single,
    /// Best fixed subset, of the trial budget or the given size.
    Bih(Option<usize>),
    /// Individually best `B` arms.
    Top,
    /// Greedy `B`-subset.
    Greedy,
    /// Best fixed schedule of the given length.
    Opt(usize),
    /// `(1 - 1/e)` times the best schedule of the trial budget.
    OptApprox,
}

impl Benchmark {
    pub fn metric(&self) -> String {
        match self {
            Benchmark::Single => "regret_single".into(),
            Benchmark::Bih(None) => "regret_bih".into(),
            Benchmark::Bih(Some(k)) => format!("regret_bih:{k}"),
            Benchmark::Top => "regret_top".into(),
            Benchmark::Greedy => "regret_greedy".into(),
            Benchmark::Opt(k) => format!("regret_opt:{k}"),
            Benchmark::OptApprox => "regret_opt_approx".into(),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Benchmark::Single => f.write_str("single"),
            Benchmark::Bih(None) => f.write_str("bih"),
            Benchmark::Bih(Some(k)) => write!(f, "bih:{k}"),
            Benchmark::Top => f.write_str("top"),
            Benchmark::Greedy => f.write_str("greedy"),
            Benchmark::Opt(k) => write!(f, "opt:{k}"),
            Benchmark::OptApprox => f.write_str("opt_approx"),
        }
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let size = |k: &str| {
            k.parse::<usize>()
                .ok()
                .filter(|k| *k >= 1)
                .ok_or_else(|| Error::param(format!("benchmark {s:?} needs a size >= 1")))
        };
        Ok(match s {
            "single" => Benchmark::Single,
            "bih" => Benchmark::Bih(None),
            "top" => Benchmark::Top,
            "greedy" => Benchmark::Greedy,
            "opt_approx" => Benchmark::OptApprox,
            _ => {
                if let Some(k) = s.strip_prefix("bih:") {
                    Benchmark::Bih(Some(size(k)?))
                } else if let Some(k) = s.strip_prefix("opt:") {
                    Benchmark::Opt(size(k)?)
                } else {
                    return Err(Error::param(format!(
                        "unknown benchmark {s:?}; expected single, bih, bih:<k>, top, greedy, opt:<k> or opt_approx"
                    )));
                }
            }
        })
    }
}

impl From<Benchmark> for String {
    fn from(b: Benchmark) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for Benchmark {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Everything that determines an experiment's numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub env: EnvSpec,
    pub policy: PolicySpec,
    pub budget: usize,
    pub rounds: usize,
    pub trials: usize,
    pub seed: u64,
    pub epsilon: Setting<f64>,
    pub noise: NoiseMode,
    pub feedback: Option<FeedbackMode>,
    pub resample_cap: Setting<u32>,
    pub learning_rate: Setting<f64>,
    pub gamma: Setting<f64>,
    pub benchmarks: Vec<Benchmark>,
}

impl ExperimentSpec {
    /// Spec with defaults: auto parameters, fresh noise, 100 trials, seed 0,
    /// and a single-arm benchmark.
    pub fn new(env: EnvSpec, policy: PolicySpec, budget: usize, rounds: usize) -> Self {
        ExperimentSpec {
            env,
            policy,
            budget,
            rounds,
            trials: 100,
            seed: 0,
            epsilon: Setting::Auto,
            noise: NoiseMode::Fresh,
            feedback: None,
            resample_cap: Setting::Auto,
            learning_rate: Setting::Auto,
            gamma: Setting::Auto,
            benchmarks: vec![Benchmark::Single],
        }
    }

    pub fn feedback_mode(&self) -> FeedbackMode {
        self.feedback.unwrap_or_else(|| self.policy.default_feedback())
    }

    /// Checks everything that can be checked without running a trial.
    pub fn validate(&self) -> Result<usize> {
        self.env.validate()?;
        let n = self.env.n_arms()?;
        if self.rounds == 0 {
            return Err(Error::param("rounds T must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::param("trials K must be at least 1"));
        }
        if self.budget == 0 || self.budget > n {
            return Err(Error::BudgetOutOfRange {
                budget: self.budget,
                n_arms: n,
            });
        }
        if let Some(bb) = self.policy.box_budget() {
            if bb > self.budget || !self.budget.is_multiple_of(bb) {
                return Err(Error::IndivisibleBudget {
                    budget: self.budget,
                    box_budget: bb,
                });
            }
        }
        let feedback = self.feedback_mode();
        if !self.policy.supports(feedback) {
            return Err(Error::Unsupported(format!(
                "{} needs full feedback; semi-bandit feedback is not supported",
                self.policy
            )));
        }
        if self.env.is_job_sequence() && !(self.policy.is_scheduler() || self.policy == PolicySpec::UniformRandom) {
            return Err(Error::Unsupported(format!(
                "{} plays cost vectors; job environments need og, og_hybrid:<k> or uniform_random",
                self.policy
            )));
        }
        for b in &self.benchmarks {
            match b {
                Benchmark::Bih(Some(k)) | Benchmark::Opt(k) if *k > n => {
                    return Err(Error::BudgetOutOfRange { budget: *k, n_arms: n })
                }
                Benchmark::Top | Benchmark::Greedy if self.env.is_job_sequence() => {
                    return Err(Error::Unsupported(format!(
                        "benchmark {b} needs a cost matrix; job environments support single, bih, opt and opt_approx"
                    )))
                }
                _ => {}
            }
        }
        if let Setting::Fixed(e) = self.epsilon {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::OutOfRange {
                    what: "epsilon",
                    value: e,
                    range: "(0, inf)",
                });
            }
        }
        if let Setting::Fixed(0) = self.resample_cap {
            return Err(Error::param("resampling cap must be at least 1"));
        }
        Ok(n)
    }

    /// Builds a spec from `key = value` settings.
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let known = [
            "env", "means", "delta", "n_arms", "n_elements", "density", "path", "rewards", "policy",
            "budget", "rounds", "trials", "seed", "epsilon", "noise", "feedback", "cap",
            "learning_rate", "gamma", "benchmarks", "workers", "out",
        ];
        if let Some(k) = map.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::param(format!("unknown setting {k:?}")));
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let need = |k: &str| get(k).ok_or_else(|| Error::param(format!("missing required setting `{k}`")));
        let num = |k: &str, v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::param(format!("{k}: expected a number, got {v:?}")))
        };
        let count = |k: &str, v: &str| -> Result<usize> {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::param(format!("{k}: expected a non-negative integer, got {v:?}")))
        };
        let env = match need("env")?.trim() {
            "bernoulli" => EnvSpec::Bernoulli {
                means: need("means")?
                    .split(',')
                    .map(|v| num("means", v))
                    .collect::<Result<_>>()?,
            },
            "task1" => EnvSpec::Task1,
            "task2" => EnvSpec::Task2,
            "task3" => EnvSpec::Task3 {
                delta: num("delta", get("delta").unwrap_or("0.01"))?,
            },
            "halving" => EnvSpec::Halving {
                n_arms: count("n_arms", need("n_arms")?)?,
            },
            "adversary" => EnvSpec::DeterministicAdversary {
                n_arms: count("n_arms", need("n_arms")?)?,
            },
            "replay" => EnvSpec::Replay {
                path: PathBuf::from(need("path")?.trim()),
                rewards: parse_bool("rewards", get("rewards").unwrap_or("false"))?,
            },
            "coverage" => EnvSpec::Coverage {
                n_arms: count("n_arms", need("n_arms")?)?,
                n_elements: count("n_elements", get("n_elements").unwrap_or("20"))?,
                density: num("density", get("density").unwrap_or("0.2"))?,
            },
            other => {
                return Err(Error::param(format!(
                    "unknown environment {other:?}; expected bernoulli, task1, task2, task3, halving, adversary, replay or coverage"
                )))
            }
        };
        let policy: PolicySpec = need("policy")?.parse()?;
        let budget = count("budget", need("budget")?)?;
        let rounds = match get("rounds") {
            Some(v) => count("rounds", v)?,
            None => default_rounds(&env, budget)?,
        };
        let mut spec = ExperimentSpec::new(env, policy, budget, rounds);
        if let Some(v) = get("trials") {
            spec.trials = count("trials", v)?;
        }
        if let Some(v) = get("seed") {
            spec.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::param(format!("seed: expected an unsigned integer, got {v:?}")))?;
        }
        if let Some(v) = get("epsilon") {
            spec.epsilon = parse_setting("epsilon", v)?;
        }
        if let Some(v) = get("noise") {
            spec.noise = v.parse()?;
        }
        if let Some(v) = get("feedback") {
            spec.feedback = Some(v.parse()?);
        }
        if let Some(v) = get("cap") {
            spec.resample_cap = parse_setting("cap", v)?;
        }
        if let Some(v) = get("learning_rate") {
            spec.learning_rate = parse_setting("learning_rate", v)?;
        }
        if let Some(v) = get("gamma") {
            spec.gamma = parse_setting("gamma", v)?;
        }
        if let Some(v) = get("benchmarks") {
            spec.benchmarks = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty() && *s != "none")
                .map(str::parse)
                .collect::<Result<_>>()?;
        }
        Ok(spec)
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::param(format!("{key}: expected true or false, got {other:?}"))),
    }
}

/// Horizon used when none is configured: the recommended one for the
/// halving adversary, the file length for replays, 1000 otherwise.
pub fn default_rounds(env: &EnvSpec, budget: usize) -> Result<usize> {
    match env {
        EnvSpec::Halving { n_arms } => HalvingAdversary::new(*n_arms)?.recommended_horizon(budget),
        EnvSpec::Replay { path, rewards } => {
            Ok(crate::environments::read_cost_csv(path, *rewards)?.n_rounds())
        }
        _ => Ok(1000),
    }
}

/// Flat `key = value` settings.
pub type ConfigMap = BTreeMap<String, String>;

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: "expected `key = value`".into(),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn read_config(path: &Path) -> Result<ConfigMap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
