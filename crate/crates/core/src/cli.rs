//! Command-line front end.
//!
//! Every command reads the dataset (bundled housing table by default),
//! validates its parameters, writes `manifest.txt` with `status = running`,
//! runs, writes its result files and finally rewrites the manifest with the
//! outcome and elapsed time.
//!
//! Flags may also come from a config file (`--config PATH`): flat
//! `key = value` lines under optional `[section]` headers, where keys are
//! flag names without dashes. Lines before any header and under `[common]`
//! apply to every command, `[sweep]` etc. only to that command. Flags given
//! on the command line override the file; `OVERSIGHT_OUT_DIR` and
//! `OVERSIGHT_THREADS` override the file but not the flags.
//!
//! Randomness flows from `--seed S`. Each command uses `S + offset` with the
//! offsets in [`seed_offset`]; replicas derive `base + r` from that.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use crate::dataset::{bundled_housing, load_csv, split_train_test, standardize, Dataset};
use crate::experiments::output::{
    degradation_csv, replications_csv, strategies_csv, sweep_csv, Manifest,
};
use crate::experiments::{
    degradation_curve, emit_explanation_report, local_strategies_table, plot,
    realize_local_refit, spread_ks, weight_equivalence_sweep, ExperimentError,
    ExplanationContext, GridSpec, LocalConfig, Scope, Strategy,
};
use crate::fairglm::{fit, FitError, FitOptions, Init, StepRule, ValueWeights};
use crate::pdm::PdmPolicy;
use crate::selection::{
    build_observation2_instance, naive_select, robust_select, Candidate, CandidateSet, PolicySet,
    SelectionError,
};
use crate::values::{value_report, ValueReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

pub const OUT_DIR_ENV: &str = "OVERSIGHT_OUT_DIR";
pub const THREADS_ENV: &str = "OVERSIGHT_THREADS";

/// Offset added to `--seed` by each command.
pub fn seed_offset(command: &str) -> u64 {
    match command {
        "fit" => 0,
        "sweep" => 1,
        "degrade" => 2,
        "local" => 3,
        "robust" => 4,
        "obs2" => 5,
        "explain" => 6,
        _ => 0,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "oversight",
    version,
    about = "Fairness-regularized decisions under human oversight"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Common {
    /// CSV file with a header row; the bundled housing table when omitted.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Target column, binarized at its median.
    #[arg(long, global = true, default_value = "MEDV")]
    target: String,
    /// Comma-separated sensitive columns.
    #[arg(long, global = true, default_value = "B,TAX")]
    sensitive: String,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker cap; 1 runs serially.
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plots: bool,
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    #[arg(long, default_value_t = 1e-6)]
    ridge: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// `backtracking` or `fixed:ETA`.
    #[arg(long, default_value = "backtracking")]
    step: String,
    /// `zeros` or `gaussian`.
    #[arg(long, default_value = "zeros")]
    init: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one model on the full data; writes model.txt and report.csv.
    Fit(FitCmd),
    /// Weight-equivalence sweep; writes sweep.csv.
    Sweep(SweepCmd),
    /// Degradation of values under random corrections; writes degradation.csv.
    Degrade(DegradeCmd),
    /// Global vs. local strategies; writes strategies.csv and replications.csv.
    Local(LocalCmd),
    /// Naive vs. robust selection among fitted candidates; writes scores.csv and selection.csv.
    Robust(RobustCmd),
    /// Constructed instance where naive and robust selection disagree; writes scores.csv.
    Obs2(Obs2Cmd),
    /// Layered explanation report; writes explanation.csv and explanation.json.
    Explain(ExplainCmd),
}

#[derive(Debug, Args, Serialize)]
struct FitCmd {
    #[arg(long, default_value = "0.5,0.25")]
    weights: String,
    #[command(flatten)]
    #[serde(flatten)]
    fit: FitArgs,
}

#[derive(Debug, Args, Serialize)]
struct SweepCmd {
    #[arg(long, default_value = "0.5,0.25")]
    w_star: String,
    #[arg(long, default_value_t = 0.01)]
    tau: f64,
    /// `min:max:steps` per axis, joined by `x`.
    #[arg(long, default_value = "0:1:30x0:1:30")]
    grid: String,
    #[command(flatten)]
    #[serde(flatten)]
    fit: FitArgs,
}

#[derive(Debug, Args, Serialize)]
struct DegradeCmd {
    #[arg(long, default_value = "0.5,0.25")]
    w_star: String,
    /// Comma-separated correction counts starting at 0, or `auto` to spread
    /// `--points` values up to the model's error count.
    #[arg(long, default_value = "auto")]
    ks: String,
    #[arg(long, default_value_t = 11)]
    points: usize,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[command(flatten)]
    #[serde(flatten)]
    fit: FitArgs,
}

#[derive(Debug, Args, Serialize)]
struct LocalCmd {
    #[arg(long, default_value = "0.5,0.25")]
    w_star: String,
    /// Feature the population is split on.
    #[arg(long, default_value = "B")]
    attr: String,
    #[arg(long, default_value_t = 50.0)]
    threshold: f64,
    /// Percentage of each subpopulation corrected by the overseer.
    #[arg(long, default_value_t = 20.0)]
    p: f64,
    #[arg(long, default_value_t = 100)]
    replications: usize,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[command(flatten)]
    #[serde(flatten)]
    fit: FitArgs,
}

#[derive(Debug, Args, Serialize)]
struct RobustCmd {
    /// Candidate weight vectors separated by `;`.
    #[arg(long, default_value = "0,0;0.5,0.25;2,1")]
    candidates: String,
    /// Overseer policy, repeatable; every candidate faces all of them.
    #[arg(long = "policy", default_values_t = ["identity".to_string(), "eps:labels:0.05".to_string()])]
    policies: Vec<String>,
    /// Weights of the evaluation objective.
    #[arg(long, default_value = "0.5,0.25")]
    weights: String,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[command(flatten)]
    #[serde(flatten)]
    fit: FitArgs,
}

#[derive(Debug, Args, Serialize)]
struct Obs2Cmd {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0.02)]
    eps: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
}

#[derive(Debug, Args, Serialize)]
struct ExplainCmd {
    /// E1 (predictions) to E4 (with value reports).
    #[arg(long, default_value = "E2")]
    scope: String,
    /// Weights the model is fitted with.
    #[arg(long, default_value = "0.5,0.25")]
    w_star: String,
    /// Weights of the value reports; required by E4.
    #[arg(long)]
    weights: Option<String>,
    /// Overseer policy; required from E3 on.
    #[arg(long)]
    policy: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    fit: FitArgs,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Fit(_) => "fit",
            Self::Sweep(_) => "sweep",
            Self::Degrade(_) => "degrade",
            Self::Local(_) => "local",
            Self::Robust(_) => "robust",
            Self::Obs2(_) => "obs2",
            Self::Explain(_) => "explain",
        }
    }

    fn echo(&self) -> serde_json::Value {
        let v = match self {
            Self::Fit(c) => serde_json::to_value(c),
            Self::Sweep(c) => serde_json::to_value(c),
            Self::Degrade(c) => serde_json::to_value(c),
            Self::Local(c) => serde_json::to_value(c),
            Self::Robust(c) => serde_json::to_value(c),
            Self::Obs2(c) => serde_json::to_value(c),
            Self::Explain(c) => serde_json::to_value(c),
        };
        v.unwrap_or_default()
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Validation(_) => EXIT_VALIDATION,
            Self::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Validation(m) | Self::Runtime(m) => m,
        }
    }
}

fn invalid(param: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("invalid --{param}: {e}"))
}

fn runtime_io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        let msg = e.to_string();
        match e {
            ExperimentError::Fit(FitError::NonFiniteIterate { .. })
            | ExperimentError::EmptySubpopulation { .. } => Self::Runtime(msg),
            _ => Self::Validation(msg),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        ExperimentError::from(e).into()
    }
}

impl From<SelectionError> for CliError {
    fn from(e: SelectionError) -> Self {
        ExperimentError::from(e).into()
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr as one line.
pub fn parse_and_run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    match run(args) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("oversight: {}", e.message().lines().next().unwrap_or_default());
            e.code()
        }
    }
}

fn run(args: Vec<String>) -> Result<(), CliError> {
    let args = merge_config(args)?;
    let cmd = Cli::command()
        .args_override_self(true)
        .mut_subcommands(|s| s.args_override_self(true));
    let matches = match cmd.try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Usage(e.to_string().trim_start_matches("error: ").to_string()));
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.common.threads {
        if t == 0 {
            return Err(invalid("threads", "must be at least 1"));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| execute(&cli, pool.current_num_threads()))
}

const VALUE_FLAGS_BEFORE_COMMAND: [&str; 7] =
    ["--data", "--target", "--sensitive", "--out", "--seed", "--threads", "--config"];

/// Puts config-file flags right after the subcommand name, ahead of every
/// flag from the command line, so the latter win.
fn merge_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut config = None;
    let mut command_pos = None;
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else if a == "--config" {
            config = args.get(i + 1).cloned();
        }
        if command_pos.is_none() {
            if !a.starts_with('-') {
                command_pos = Some(i);
            } else if VALUE_FLAGS_BEFORE_COMMAND.contains(&a.as_str()) {
                i += 1;
            }
        }
        i += 1;
    }
    let (Some(path), Some(pos)) = (config, command_pos) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Validation(format!("cannot read --config {path}: {e}")))?;
    // A flag given on the command line replaces every file value for it,
    // including repeatable ones such as `--policy`.
    let given: Vec<&str> = args[1..]
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a))
        .collect();
    let injected: Vec<String> = config_flags(&text, &args[pos])?
        .into_iter()
        .filter(|f| {
            let key = f.trim_start_matches("--");
            !given.contains(&key.split('=').next().unwrap_or(key))
        })
        .collect();
    let mut merged = vec![args[0].clone(), args[pos].clone()];
    merged.extend(injected);
    merged.extend(args[1..pos].iter().cloned());
    merged.extend(args[pos + 1..].iter().cloned());
    Ok(merged)
}

fn config_flags(text: &str, command: &str) -> Result<Vec<String>, CliError> {
    let mut flags = Vec::new();
    let mut section: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(name.trim().to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected `key = value`",
                lineno + 1
            )));
        };
        let applies = match section.as_deref() {
            None | Some("common") => true,
            Some(s) => s == command,
        };
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        let env_set = |var: &str| std::env::var_os(var).is_some();
        if !applies
            || key == "config"
            || (key == "out" && env_set(OUT_DIR_ENV))
            || (key == "threads" && env_set(THREADS_ENV))
        {
            continue;
        }
        if key == "plots" {
            match value {
                "true" => flags.push("--plots".to_string()),
                "false" => {}
                _ => return Err(CliError::Usage(format!("config: plots must be true or false, got `{value}`"))),
            }
            continue;
        }
        flags.push(format!("--{key}={value}"));
    }
    Ok(flags)
}

fn fit_options(a: &FitArgs, seed: u64) -> Result<FitOptions, CliError> {
    let step_rule = match a.step.as_str() {
        "backtracking" => FitOptions::default().step_rule,
        s => match s.strip_prefix("fixed:").map(str::parse::<f64>) {
            Some(Ok(eta)) => StepRule::Fixed(eta),
            _ => return Err(invalid("step", format!("expected `backtracking` or `fixed:ETA`, got `{s}`"))),
        },
    };
    let init = match a.init.as_str() {
        "zeros" => Init::Zeros,
        "gaussian" => Init::Gaussian,
        s => return Err(invalid("init", format!("expected `zeros` or `gaussian`, got `{s}`"))),
    };
    let opts = FitOptions {
        max_iters: a.max_iters,
        tolerance: a.tolerance,
        step_rule,
        ridge: a.ridge,
        init,
        seed,
    };
    opts.validate().map_err(CliError::from)?;
    Ok(opts)
}

fn weights(param: &str, s: &str, m: usize) -> Result<ValueWeights, CliError> {
    let w: ValueWeights = s.parse().map_err(|e| invalid(param, e))?;
    if w.len() != m {
        return Err(invalid(param, format!("{} weights for {m} sensitive attributes", w.len())));
    }
    Ok(w)
}

fn load_data(c: &Common) -> Result<Dataset, CliError> {
    let sensitive: Vec<&str> = c
        .sensitive
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let table = match &c.data {
        None if c.target == "MEDV" && sensitive == ["B", "TAX"] => bundled_housing(),
        None => crate::dataset::parse_csv(crate::dataset::BUNDLED_HOUSING_CSV, &c.target, &sensitive)
            .map_err(|e| CliError::Validation(e.to_string()))?,
        Some(path) => {
            if !path.is_file() {
                return Err(invalid("data", format!("{} does not exist", path.display())));
            }
            load_csv(path, &c.target, &sensitive).map_err(|e| CliError::Validation(e.to_string()))?
        }
    };
    standardize(&table).map_err(|e| CliError::Validation(e.to_string()))
}

/// Validated, ready-to-run form of a command.
enum Job {
    Fit { w: ValueWeights, opts: FitOptions },
    Sweep { w: ValueWeights, tau: f64, grid: GridSpec, opts: FitOptions },
    Degrade { w: ValueWeights, ks: Option<Vec<usize>>, points: usize, runs: usize, opts: FitOptions },
    Local { w: ValueWeights, cfg: LocalConfig, opts: FitOptions },
    Robust { cands: Vec<ValueWeights>, policies: Vec<PdmPolicy>, w: ValueWeights, test_fraction: f64, opts: FitOptions },
    Obs2 { n: usize, eps: f64, delta: f64 },
    Explain { scope: Scope, w: ValueWeights, weights: Option<ValueWeights>, policy: Option<PdmPolicy>, opts: FitOptions },
}

fn validate(cmd: &Command, data: Option<&Dataset>, seed: u64) -> Result<Job, CliError> {
    let m = data.map_or(0, |d| d.sensitive.len());
    let job = match cmd {
        Command::Fit(c) => Job::Fit {
            w: weights("weights", &c.weights, m)?,
            opts: fit_options(&c.fit, seed)?,
        },
        Command::Sweep(c) => {
            if !(0.0..=1.0).contains(&c.tau) {
                return Err(invalid("tau", format!("must lie in [0, 1], got {}", c.tau)));
            }
            let grid: GridSpec = c.grid.parse().map_err(|e| invalid("grid", e))?;
            if grid.0.len() != m {
                return Err(invalid("grid", format!("{} axes for {m} sensitive attributes", grid.0.len())));
            }
            Job::Sweep {
                w: weights("w-star", &c.w_star, m)?,
                tau: c.tau,
                grid,
                opts: fit_options(&c.fit, seed)?,
            }
        }
        Command::Degrade(c) => {
            if c.runs == 0 {
                return Err(invalid("runs", "must be at least 1"));
            }
            let ks = if c.ks == "auto" {
                if c.points < 2 {
                    return Err(invalid("points", "must be at least 2"));
                }
                None
            } else {
                let ks = c
                    .ks
                    .split(',')
                    .map(|k| k.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| invalid("ks", e))?;
                if ks.first() != Some(&0) || ks.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid("ks", "must start at 0 and be strictly increasing"));
                }
                Some(ks)
            };
            Job::Degrade {
                w: weights("w-star", &c.w_star, m)?,
                ks,
                points: c.points,
                runs: c.runs,
                opts: fit_options(&c.fit, seed)?,
            }
        }
        Command::Local(c) => {
            let data = data.expect("local needs data");
            let attr_index = data
                .feature_index(&c.attr)
                .ok_or_else(|| invalid("attr", format!("no feature named `{}`", c.attr)))?;
            if !(0.0..=100.0).contains(&c.p) {
                return Err(invalid("p", format!("must lie in [0, 100], got {}", c.p)));
            }
            if c.replications == 0 {
                return Err(invalid("replications", "must be at least 1"));
            }
            if !(c.test_fraction > 0.0 && c.test_fraction < 1.0) {
                return Err(invalid("test-fraction", format!("must lie in (0, 1), got {}", c.test_fraction)));
            }
            let cfg = LocalConfig {
                threshold: c.threshold,
                p_percent: c.p,
                replications: c.replications,
                test_fraction: c.test_fraction,
                base_seed: seed,
                ..LocalConfig::new(attr_index)
            };
            Job::Local {
                w: weights("w-star", &c.w_star, m)?,
                cfg,
                opts: fit_options(&c.fit, seed)?,
            }
        }
        Command::Robust(c) => {
            let cands = c
                .candidates
                .split(';')
                .map(|s| weights("candidates", s, m))
                .collect::<Result<Vec<_>, _>>()?;
            let policies = c
                .policies
                .iter()
                .map(|p| p.parse::<PdmPolicy>().map_err(|e| invalid("policy", e)))
                .collect::<Result<Vec<_>, _>>()?;
            if !(c.test_fraction > 0.0 && c.test_fraction < 1.0) {
                return Err(invalid("test-fraction", format!("must lie in (0, 1), got {}", c.test_fraction)));
            }
            Job::Robust {
                cands,
                policies,
                w: weights("weights", &c.weights, m)?,
                test_fraction: c.test_fraction,
                opts: fit_options(&c.fit, seed)?,
            }
        }
        Command::Obs2(c) => {
            if !(c.delta > 0.0 && c.delta < c.eps && c.eps <= 1.0) {
                return Err(invalid("eps", format!("need 0 < delta < eps <= 1, got eps = {}, delta = {}", c.eps, c.delta)));
            }
            if c.n == 0 {
                return Err(invalid("n", "must be positive"));
            }
            Job::Obs2 { n: c.n, eps: c.eps, delta: c.delta }
        }
        Command::Explain(c) => Job::Explain {
            scope: c.scope.parse().map_err(|e| invalid("scope", e))?,
            w: weights("w-star", &c.w_star, m)?,
            weights: c.weights.as_deref().map(|s| weights("weights", s, m)).transpose()?,
            policy: c
                .policy
                .as_deref()
                .map(|p| p.parse::<PdmPolicy>().map_err(|e| invalid("policy", e)))
                .transpose()?,
            opts: fit_options(&c.fit, seed)?,
        },
    };
    Ok(job)
}

fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn flatten_echo(prefix: &str, v: &serde_json::Value, manifest: &mut Manifest) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                flatten_echo(k, v, manifest);
            }
        }
        serde_json::Value::Null => manifest.push(prefix, ""),
        serde_json::Value::String(s) => manifest.push(prefix, s),
        serde_json::Value::Array(items) => manifest.push(
            prefix,
            items
                .iter()
                .map(|i| i.as_str().map_or_else(|| i.to_string(), str::to_string))
                .collect::<Vec<_>>()
                .join(" | "),
        ),
        other => manifest.push(prefix, other),
    }
}

fn execute(cli: &Cli, threads: usize) -> Result<(), CliError> {
    let name = cli.command.name();
    let seed = cli.common.seed.wrapping_add(seed_offset(name));
    let data = match cli.command {
        Command::Obs2(_) => None,
        _ => Some(load_data(&cli.common)?),
    };
    let job = validate(&cli.command, data.as_ref(), seed)?;

    let out = &cli.common.out;
    let mut manifest = Manifest::default();
    manifest.push("command", name);
    manifest.push(
        "data",
        cli.common.data.as_ref().map_or("bundled".to_string(), |p| p.display().to_string()),
    );
    manifest.push("target", &cli.common.target);
    manifest.push("sensitive", &cli.common.sensitive);
    manifest.push("seed", cli.common.seed);
    manifest.push("command_seed", seed);
    manifest.push("threads", threads);
    manifest.push("plots", cli.common.plots);
    flatten_echo("", &cli.command.echo(), &mut manifest);
    manifest.push("started_unix", unix_seconds());
    manifest.push("status", "running");
    manifest.write(out).map_err(|e| runtime_io(out, e))?;

    let start = Instant::now();
    let result = run_job(job, data.as_ref(), out, cli.common.plots);
    manifest.push("elapsed_seconds", format!("{:.3}", start.elapsed().as_secs_f64()));
    match &result {
        Ok(files) => {
            manifest.set("status", "ok");
            manifest.push("outputs", files.join(","));
        }
        Err(e) => manifest.set("status", format!("failed: {}", e.message())),
    }
    manifest.write(out).map_err(|e| runtime_io(out, e))?;
    result.map(|_| ())
}

fn write(out: &Path, file: &str, content: &str, files: &mut Vec<String>) -> Result<(), CliError> {
    let path = out.join(file);
    fs::write(&path, content).map_err(|e| runtime_io(&path, e))?;
    files.push(file.to_string());
    Ok(())
}

fn attribute_names(data: &Dataset) -> Vec<String> {
    data.sensitive.iter().map(|&s| data.feature_names[s].clone()).collect()
}

fn run_job(job: Job, data: Option<&Dataset>, out: &Path, plots: bool) -> Result<Vec<String>, CliError> {
    let mut files = Vec::new();
    match job {
        Job::Fit { w, opts } => {
            let data = data.expect("fit needs data");
            let model = fit(data, &w, &opts)?;
            let report = value_report(data, &model.decisions(data)?, &data.y, &w)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            write(out, "model.txt", &model.to_text(), &mut files)?;
            let csv = ValueReport::csv_header(w.len()) + "\n" + &report.csv_row() + "\n";
            write(out, "report.csv", &csv, &mut files)?;
            println!(
                "accuracy {:.4}, F {:.4}, converged {}",
                report.accuracy, report.f, model.fit_info.converged
            );
        }
        Job::Sweep { w, tau, grid, opts } => {
            let data = data.expect("sweep needs data");
            let result = weight_equivalence_sweep(data, &w, &grid, tau, &opts)?;
            write(out, "sweep.csv", &sweep_csv(&result), &mut files)?;
            if plots {
                let names = attribute_names(data);
                if let Some(svg) = plot::sweep_scatter(&result, &names) {
                    write(out, "sweep_scatter.svg", &svg, &mut files)?;
                }
                if let Some(svg) = plot::sweep_heatmap(&result, &names) {
                    write(out, "sweep_heatmap.svg", &svg, &mut files)?;
                }
            }
            println!(
                "{} of {} grid points within tau = {tau}; {} failed fits",
                result.equivalent_set.len(),
                result.grid.len(),
                result.failures.len()
            );
        }
        Job::Degrade { w, ks, points, runs, opts } => {
            let data = data.expect("degrade needs data");
            let ks = match ks {
                Some(ks) => ks,
                None => {
                    let rec = fit(data, &w, &opts)?.decisions(data)?;
                    let errors = rec.iter().zip(&data.y).filter(|(a, b)| a != b).count();
                    spread_ks(errors, points)
                }
            };
            let curve = degradation_curve(data, &w, &ks, runs, opts.seed, &opts)?;
            write(out, "degradation.csv", &degradation_csv(&curve), &mut files)?;
            if plots {
                for (a, attr) in curve.attributes.iter().enumerate() {
                    let svg = plot::degradation_lines(&curve, a);
                    write(out, &format!("degradation_{attr}.svg"), &svg, &mut files)?;
                }
            }
            println!("{} corrections levels, {runs} runs, {} model errors", curve.ks.len(), curve.error_count);
        }
        Job::Local { w, cfg, opts } => {
            let data = data.expect("local needs data");
            let table = local_strategies_table(data, &w, &cfg, &opts)?;
            write(out, "strategies.csv", &strategies_csv(&table), &mut files)?;
            write(out, "replications.csv", &replications_csv(&table), &mut files)?;
            for s in [Strategy::GlobalOpt, Strategy::LocalCorrectGt, Strategy::LocalOptSociety] {
                let row = table.row(s);
                let rho: Vec<String> = row.rho_mean.iter().map(|r| format!("{r:.4}")).collect();
                println!("{s}: rho [{}], accuracy {:.4}", rho.join(", "), row.accuracy_mean);
            }
        }
        Job::Robust { cands, policies, w, test_fraction, opts } => {
            let data = data.expect("robust needs data");
            let split = split_train_test(data, test_fraction, opts.seed)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let (train, test) = (&split.train, &split.test);
            let candidates = cands
                .iter()
                .map(|cw| {
                    Ok(Candidate {
                        label: format!("w={cw}"),
                        decisions: fit(train, cw, &opts)?.decisions(test)?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let policies = policies
                .iter()
                .map(|p| realize_local_refit(p, train, test, &opts))
                .collect::<Result<Vec<_>, _>>()?;
            let cset = CandidateSet::new(candidates, test.y.clone())?;
            let pset = PolicySet::uniform(policies, cset.len());
            let naive = naive_select(&cset, &w, test)?;
            let robust = robust_select(&cset, &pset, &w, test)?;
            write(out, "scores.csv", &robust.matrix.to_csv(), &mut files)?;
            let mut sel = String::from("candidate,label,naive_f,worst_case_f,naive_winner,robust_winner\n");
            for (i, c) in cset.candidates.iter().enumerate() {
                let f = value_report(test, &c.decisions, &test.y, &w)
                    .map_err(|e| CliError::Runtime(e.to_string()))?
                    .f;
                let _ = writeln!(
                    sel,
                    "{i},{},{f:.16e},{:.16e},{},{}",
                    c.label,
                    robust.worst_case[i],
                    u8::from(i == naive),
                    u8::from(i == robust.winner)
                );
            }
            write(out, "selection.csv", &sel, &mut files)?;
            println!("naive winner: {}", cset.candidates[naive].label);
            println!("robust winner: {}", cset.candidates[robust.winner].label);
        }
        Job::Obs2 { n, eps, delta } => {
            let inst = build_observation2_instance(n, eps, delta)?;
            let w = inst.weights();
            let naive = naive_select(&inst.candidates, &w, &inst.data)?;
            let robust = robust_select(&inst.candidates, &inst.policies, &w, &inst.data)?;
            let csv = robust.matrix.to_csv();
            write(out, "scores.csv", &csv, &mut files)?;
            println!("n = {}, budget = {}", inst.n(), inst.budget);
            println!("naive winner: {}", inst.candidates.candidates[naive].label);
            println!("robust winner: {}", inst.candidates.candidates[robust.winner].label);
            print!("{csv}");
        }
        Job::Explain { scope, w, weights, policy, opts } => {
            let data = data.expect("explain needs data");
            let model = fit(data, &w, &opts)?;
            let ctx = ExplanationContext {
                model: &model,
                data,
                policy: policy.as_ref(),
                weights: weights.as_ref(),
            };
            let report = emit_explanation_report(scope, &ctx)?;
            write(out, "explanation.csv", &report.records_csv(), &mut files)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))? + "\n";
            write(out, "explanation.json", &json, &mut files)?;
            println!("{scope}: {} records", report.records.len());
        }
    }
    Ok(files)
}
