use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpml::harness::selftest::{run_suite, Suite};
use fpml::harness::{
    format_sweep_csv, read_config, run_experiment, run_sweep, write_results, ConfigMap, ExperimentSpec,
    PolicySpec, ResultFormat, Summary,
};
use fpml::lp::{lp_feasibility_solve, lp_iterations, read_instance, FeasibilityOutcome, OracleKind};
use fpml::domain::rng_from_seed;
use fpml::Error;

#[derive(Parser)]
#[command(name = "fpml", version, about = "Budgeted adversarial online learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and print its summary.
    Run(ExperimentArgs),
    /// Run every policy x budget combination into one CSV.
    Sweep(ExperimentArgs),
    /// Solve an LP feasibility instance.
    Lp(LpArgs),
    /// Run the fast invariant suites.
    Selftest(SelftestArgs),
}

/// Experiment settings. Each flag overrides the config-file key of the
/// same name (dashes become underscores).
#[derive(Args)]
struct ExperimentArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// bernoulli | task1 | task2 | task3 | halving | adversary | replay | coverage
    #[arg(long)]
    env: Option<String>,
    /// Bernoulli means, comma separated.
    #[arg(long)]
    means: Option<String>,
    /// Task 3 gap parameter.
    #[arg(long)]
    delta: Option<String>,
    /// Arm count for halving, adversary and coverage environments.
    #[arg(long)]
    n_arms: Option<String>,
    /// Elements per coverage job.
    #[arg(long)]
    n_elements: Option<String>,
    /// Coverage probability per arm and element.
    #[arg(long)]
    density: Option<String>,
    /// Cost (or reward) matrix for the replay environment.
    #[arg(long)]
    path: Option<String>,
    /// Treat the replay file as rewards.
    #[arg(long)]
    rewards: Option<String>,
    /// fpml | fpml_partial | ftml | og | og_hybrid:<k> | hedge | exp3 | uniform_random (comma list for sweep)
    #[arg(long)]
    policy: Option<String>,
    /// Arms per round (comma list or a..b range for sweep).
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Perturbation rate or `auto`.
    #[arg(long)]
    epsilon: Option<String>,
    /// fresh | frozen
    #[arg(long)]
    noise: Option<String>,
    /// full | semi
    #[arg(long)]
    feedback: Option<String>,
    /// Geometric resampling cap or `auto`.
    #[arg(long)]
    cap: Option<String>,
    /// Hedge/Exp3 learning rate or `auto`.
    #[arg(long)]
    learning_rate: Option<String>,
    /// Exp3 exploration or `auto`.
    #[arg(long)]
    gamma: Option<String>,
    /// single, bih, bih:<k>, top, greedy, opt:<k>, opt_approx (comma list)
    #[arg(long)]
    benchmarks: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<String>,
    /// Output file; `.csv` writes the per-trial table, anything else JSON.
    #[arg(long)]
    out: Option<String>,
}

impl ExperimentArgs {
    fn settings(&self) -> Result<ConfigMap, Error> {
        let mut map = match &self.config {
            Some(p) => read_config(p)?,
            None => ConfigMap::new(),
        };
        let flags = [
            ("env", &self.env),
            ("means", &self.means),
            ("delta", &self.delta),
            ("n_arms", &self.n_arms),
            ("n_elements", &self.n_elements),
            ("density", &self.density),
            ("path", &self.path),
            ("rewards", &self.rewards),
            ("policy", &self.policy),
            ("budget", &self.budget),
            ("rounds", &self.rounds),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("epsilon", &self.epsilon),
            ("noise", &self.noise),
            ("feedback", &self.feedback),
            ("cap", &self.cap),
            ("learning_rate", &self.learning_rate),
            ("gamma", &self.gamma),
            ("benchmarks", &self.benchmarks),
            ("workers", &self.workers),
            ("out", &self.out),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        Ok(map)
    }
}

#[derive(Args)]
struct LpArgs {
    /// Config file with keys instance, eps, budget, samples, oracle, search_budget, seed, out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance file of `key = value` lines (n, m, A, b, lower, upper, rho).
    #[arg(long)]
    instance: Option<String>,
    /// Feasibility tolerance.
    #[arg(long)]
    eps: Option<String>,
    /// Constraints sampled per tuple.
    #[arg(long)]
    budget: Option<String>,
    /// Monte Carlo samples per round (default 1000).
    #[arg(long)]
    samples: Option<String>,
    /// exact | search (default exact for budget 1, search otherwise).
    #[arg(long)]
    oracle: Option<String>,
    /// Candidate points for the search oracle (default 256).
    #[arg(long)]
    search_budget: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Write the outcome as JSON here.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct SelftestArgs {
    /// lemma1 | selection | estimator | hindsight (repeatable; default all).
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure category: bad input exits 2, runtime failure exits 1.
enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn invalid(e: impl ToString) -> Self {
        Failure::Invalid(e.to_string())
    }

    fn runtime(e: impl ToString) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn parse_usize(key: &str, v: &str) -> Result<usize, Failure> {
    v.trim()
        .parse()
        .map_err(|_| Failure::Invalid(format!("{key}: expected a non-negative integer, got {v:?}")))
}

fn workers(map: &ConfigMap) -> Result<usize, Failure> {
    map.get("workers").map_or(Ok(0), |v| parse_usize("workers", v))
}

fn print_summary(s: &Summary) {
    let p = &s.metadata.params;
    println!(
        "env {} | policy {} | B = {} | T = {} | K = {} | seed {}",
        s.spec.env.name(),
        s.spec.policy,
        s.spec.budget,
        s.spec.rounds,
        s.spec.trials,
        s.spec.seed
    );
    let mut resolved = Vec::new();
    if let Some(f) = p.feedback {
        resolved.push(format!("feedback {f:?}").to_lowercase());
    }
    if let Some(e) = p.epsilon {
        resolved.push(format!("epsilon {e:.6}"));
    }
    if let Some(m) = p.resample_cap {
        resolved.push(format!("cap {m}"));
    }
    if let Some(r) = p.learning_rate {
        resolved.push(format!("learning rate {r:.6}"));
    }
    if let Some(g) = p.gamma {
        resolved.push(format!("gamma {g:.6}"));
    }
    println!("resolved: {}", resolved.join(", "));
    println!("{:<22} {:>14} {:>14}", "metric", "mean", "std");
    for (name, m) in &s.metrics {
        println!("{name:<22} {:>14.6} {:>14.6}", m.mean, m.std);
    }
    if s.metadata.single_trial {
        println!("(single trial: std reported as 0)");
    }
    for note in &s.metadata.notes {
        println!("note: {note}");
    }
}

fn cmd_run(args: &ExperimentArgs) -> Result<(), Failure> {
    let map = args.settings().map_err(Failure::invalid)?;
    let spec = ExperimentSpec::from_map(&map).map_err(Failure::invalid)?;
    spec.validate().map_err(Failure::invalid)?;
    let workers = workers(&map)?;
    let exp = run_experiment(&spec, workers).map_err(Failure::runtime)?;
    print_summary(&exp.summary);
    if let Some(out) = map.get("out") {
        let path = Path::new(out);
        write_results(&exp.summary, path, ResultFormat::from_path(path)).map_err(Failure::runtime)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn parse_budgets(text: &str) -> Result<Vec<usize>, Failure> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b) = (parse_usize("budget", a)?, parse_usize("budget", b.trim_start_matches('='))?);
            out.extend(a..=b);
        } else {
            out.push(parse_usize("budget", part)?);
        }
    }
    if out.is_empty() {
        return Err(Failure::Invalid("budget: no values given".into()));
    }
    Ok(out)
}

fn cmd_sweep(args: &ExperimentArgs) -> Result<(), Failure> {
    let mut map = args.settings().map_err(Failure::invalid)?;
    let policies: Vec<PolicySpec> = map
        .get("policy")
        .ok_or_else(|| Failure::Invalid("missing required setting `policy`".into()))?
        .split(',')
        .map(|p| p.parse())
        .collect::<Result<_, _>>()
        .map_err(Failure::invalid)?;
    let budgets = parse_budgets(
        map.get("budget")
            .ok_or_else(|| Failure::Invalid("missing required setting `budget`".into()))?,
    )?;
    // The base spec takes the first policy and smallest budget; rounds
    // default from it too.
    map.insert("policy".into(), policies[0].to_string());
    map.insert("budget".into(), budgets.iter().min().unwrap().to_string());
    let base = ExperimentSpec::from_map(&map).map_err(Failure::invalid)?;
    base.env.validate().map_err(Failure::invalid)?;
    let cells = run_sweep(&base, &policies, &budgets, workers(&map)?).map_err(Failure::runtime)?;
    for c in &cells {
        match &c.summary {
            Some(s) => {
                let reward = s.metrics.get("mean_reward").map_or(f64::NAN, |m| m.mean);
                println!("{:<18} B = {:<3} mean reward {reward:.6}", c.policy.to_string(), c.budget);
            }
            None => println!(
                "{:<18} B = {:<3} invalid: {}",
                c.policy.to_string(),
                c.budget,
                c.reason.as_deref().unwrap_or("")
            ),
        }
    }
    let csv = format_sweep_csv(&cells);
    match map.get("out") {
        Some(out) => {
            std::fs::write(out, csv).map_err(|e| Failure::runtime(format!("{out}: {e}")))?;
            println!("wrote {out}");
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_lp(args: &LpArgs) -> Result<(), Failure> {
    let mut map = match &args.config {
        Some(p) => read_config(p).map_err(Failure::invalid)?,
        None => ConfigMap::new(),
    };
    for (k, v) in [
        ("instance", &args.instance),
        ("eps", &args.eps),
        ("budget", &args.budget),
        ("samples", &args.samples),
        ("oracle", &args.oracle),
        ("search_budget", &args.search_budget),
        ("seed", &args.seed),
        ("out", &args.out),
    ] {
        if let Some(v) = v {
            map.insert(k.into(), v.clone());
        }
    }
    let need = |k: &str| {
        map.get(k)
            .ok_or_else(|| Failure::Invalid(format!("missing required setting `{k}`")))
    };
    let inst = read_instance(Path::new(need("instance")?)).map_err(Failure::invalid)?;
    let eps: f64 = need("eps")?
        .trim()
        .parse()
        .map_err(|_| Failure::Invalid("eps: expected a number".into()))?;
    let budget = parse_usize("budget", need("budget")?)?;
    let samples = map.get("samples").map_or(Ok(1000), |v| parse_usize("samples", v))?;
    let search_budget = map
        .get("search_budget")
        .map_or(Ok(256), |v| parse_usize("search_budget", v))?;
    let oracle = match map.get("oracle").map(|s| s.trim()) {
        Some("exact") => OracleKind::ExactBox,
        Some("search") => OracleKind::Search { budget: search_budget },
        None if budget == 1 => OracleKind::ExactBox,
        None => OracleKind::Search { budget: search_budget },
        Some(other) => return Err(Failure::Invalid(format!("oracle: expected exact or search, got {other:?}"))),
    };
    let seed: u64 = map
        .get("seed")
        .map_or(Ok(0), |v| v.trim().parse())
        .map_err(|_| Failure::Invalid("seed: expected an unsigned integer".into()))?;
    let bound = lp_iterations(eps, inst.rho(), budget, inst.n_constraints()).map_err(Failure::invalid)?;
    let mut rng = rng_from_seed(seed);
    let outcome = lp_feasibility_solve(&inst, eps, budget, oracle, samples, &mut rng).map_err(Failure::invalid)?;
    println!("{}", outcome.label());
    match &outcome {
        FeasibilityOutcome::Feasible { x, .. } => {
            println!("x = {x:?}");
            println!("min slack {:.6}", outcome.min_slack().unwrap());
        }
        FeasibilityOutcome::Infeasible { round } => println!("infeasible at round {round}"),
        FeasibilityOutcome::Undetermined { round } => {
            println!("search oracle found no point at round {round}; this is not a certificate")
        }
    }
    println!("rounds {} of at most {bound} (rho = {})", outcome.rounds(), inst.rho());
    if let Some(out) = map.get("out") {
        let text = serde_json::to_string_pretty(&outcome).map_err(Failure::runtime)?;
        std::fs::write(out, text).map_err(|e| Failure::runtime(format!("{out}: {e}")))?;
    }
    Ok(())
}

fn cmd_selftest(args: &SelftestArgs) -> Result<(), Failure> {
    let suites: Vec<Suite> = if args.suite.is_empty() {
        Suite::ALL.to_vec()
    } else {
        args.suite.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(Failure::invalid)?
    };
    let mut failed = 0;
    for s in suites {
        let r = run_suite(s, args.seed).map_err(Failure::runtime)?;
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.suite, r.detail);
        failed += !r.passed as usize;
    }
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} suite(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Lp(a) => cmd_lp(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `fpml help` for usage");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
