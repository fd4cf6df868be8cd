//! Command-line front end: experiment configs, bundled scenarios and report
//! emission. [`execute`] runs a full command line in-process.

pub mod cache;
pub mod commands;
pub mod config;
pub mod report;
pub mod scenarios;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use fastrates_core::Error as CoreError;
use serde_json::{json, Value};

use crate::commands::{outcome_verdict, SweepParam};
use crate::config::{
    base_dir, load_json, load_problem, parse_json, read_text, CheckParams, EstimateConfig, ExperimentConfig, ScenarioRef,
    VerifyPlanFile,
};
use crate::report::{Report, Step};

pub const EXIT_CONFIG: i32 = 64;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or schema-invalid documents, unknown names.
    Config(String),
    Core(CoreError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    /// Unmet preconditions and solver non-convergence are inconclusive (2);
    /// everything else is a configuration problem (64).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::Precondition(_)) | CliError::Core(CoreError::NonConvergence { .. }) => 2,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "fastrates", version, about = "Fast-rate condition checks, GRIP, verification and bundled scenarios")]
pub struct Cli {
    /// Experiment config (for `run` without a scenario argument).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for report files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Worker threads for the parallel verifiers.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a bundled scenario or an experiment config file.
    Run {
        scenario: Option<String>,
        #[arg(long)]
        sigma_ratio: Option<f64>,
        #[arg(long)]
        j_max: Option<usize>,
    },
    /// Check a condition on a problem.
    Check {
        condition: String,
        #[arg(long)]
        problem: PathBuf,
        /// JSON object with the condition parameters; scalar flags override it.
        #[arg(long)]
        params: Option<String>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        u: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Compute the GRIP (or a mini-GRIP with `--mini f`).
    Grip {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        mini: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Divergence between P (or the density of `--g`) and the density of `--f`.
    Divergence {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        f: usize,
        #[arg(long)]
        g: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        eta_bar: Option<f64>,
    },
    /// Verify an inequality from a plan document.
    Verify {
        inequality: String,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Run one estimator on one sample.
    Estimate,
    /// Sweep η, n or ε over a grid of values.
    Sweep {
        #[arg(long, value_parser = ["eta", "n", "epsilon"])]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        grid: Vec<f64>,
    },
}

/// Result of one in-process invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses and runs a command line (`args[0]` is the program name).
pub fn execute<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Output { code, stdout: text, stderr: String::new() }
            } else {
                Output { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let run = || match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => Output {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    };
    match cli.threads {
        Some(k) if k > 0 => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Output {
                code: EXIT_CONFIG,
                stdout: String::new(),
                stderr: format!("error: cannot build thread pool: {e}\n"),
            },
        },
        Some(_) => Output {
            code: EXIT_CONFIG,
            stdout: String::new(),
            stderr: "error: --threads must be positive\n".into(),
        },
        None => run(),
    }
}

fn emit(cli: &Cli, report: &Report) -> Result<Output, CliError> {
    let text = match cli.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    if let Some(dir) = &cli.out {
        write_out(dir, &format!("report.{}", ext(cli.format)), &text)?;
    }
    Ok(Output {
        code: report.exit_code(),
        stdout: text,
        stderr: String::new(),
    })
}

fn ext(f: Format) -> &'static str {
    match f {
        Format::Json => "json",
        Format::Csv => "csv",
    }
}

fn write_out(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::write(dir.join(name), text))
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", dir.join(name).display())))
}

fn need_config(cli: &Cli, what: &str) -> Result<PathBuf, CliError> {
    cli.config
        .clone()
        .ok_or_else(|| CliError::Config(format!("{what} needs --config <path>")))
}

fn dispatch(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Run {
            scenario,
            sigma_ratio,
            j_max,
        } => {
            let mut flags = serde_json::Map::new();
            if let Some(r) = sigma_ratio {
                flags.insert("sigma_ratio".into(), json!(r));
            }
            if let Some(j) = j_max {
                flags.insert("j_max".into(), json!(j));
            }
            let report = match scenario {
                Some(name) if scenarios::BUILTINS.contains(&name.as_str()) => {
                    let params = Value::Object(flags);
                    let seed = cli.seed.unwrap_or(0);
                    let steps = scenarios::run_builtin(name, &params, seed)?;
                    Report::new(format!("run {name}"), seed, json!({ "scenario": name, "params": params }), steps)
                }
                Some(path) if Path::new(path).is_file() => run_config(cli, Path::new(path), flags)?,
                Some(name) => {
                    return Err(CliError::Config(format!(
                        "unknown scenario `{name}` (builtins: {})",
                        scenarios::BUILTINS.join(", ")
                    )))
                }
                None => run_config(cli, &need_config(cli, "run without a scenario")?, flags)?,
            };
            emit(cli, &report)
        }
        Command::Check {
            condition,
            problem,
            params,
            eta,
            u,
            c,
            beta,
            b,
            kappa,
            epsilon,
        } => {
            let prob = load_problem(problem)?;
            let mut p: CheckParams = match params {
                Some(t) => parse_json(t, "check parameters")?,
                None => CheckParams::default(),
            };
            for (slot, v) in [
                (&mut p.eta, eta),
                (&mut p.u, u),
                (&mut p.c, c),
                (&mut p.beta, beta),
                (&mut p.b, b),
                (&mut p.kappa, kappa),
                (&mut p.epsilon, epsilon),
            ] {
                if v.is_some() {
                    *slot = *v;
                }
            }
            let (v, holds) = commands::run_check(&prob, condition, &p)?;
            let config = json!({ "condition": condition, "problem": problem, "params": p });
            let report = Report::new(format!("check {condition}"), cli.seed.unwrap_or(0), config, vec![Step::check(condition.clone(), holds, v)]);
            emit(cli, &report)
        }
        Command::Grip { problem, eta, mini, tol } => {
            let prob = load_problem(problem)?;
            let step = match commands::run_grip(&prob, *eta, *mini, *tol)? {
                commands::GripOutput::Grip(g) => {
                    let c = fastrates_core::grip::verify_grip_central(&prob, &g, 1e-6)?;
                    Step::check("grip", c.holds, json!({ "grip": g, "central": c }))
                }
                m => Step::info("mini_grip", m),
            };
            let config = json!({ "problem": problem, "eta": eta, "mini": mini, "tol": tol });
            emit(cli, &Report::new("grip", cli.seed.unwrap_or(0), config, vec![step]))
        }
        Command::Divergence {
            kind,
            problem,
            f,
            g,
            alpha,
            eta_bar,
        } => {
            let prob = load_problem(problem)?;
            let v = commands::run_divergence(&prob, kind, *f, *g, *alpha, *eta_bar)?;
            let config = json!({ "kind": kind, "problem": problem, "f": f, "g": g, "alpha": alpha, "eta_bar": eta_bar });
            emit(cli, &Report::new("divergence", cli.seed.unwrap_or(0), config, vec![Step::info(kind.clone(), v)]))
        }
        Command::Verify { inequality, plan } => {
            let mut pf: VerifyPlanFile = load_json(plan, "verification plan")?;
            if cli.seed.is_some() {
                pf.seed = cli.seed;
            }
            let outcomes = commands::run_verify(inequality, &pf, &base_dir(plan))?;
            let steps = outcomes.iter().map(|o| Step::new(inequality.clone(), outcome_verdict(o), o)).collect();
            let config = serde_json::to_value(&pf).expect("plan serializes");
            emit(cli, &Report::new(format!("verify {inequality}"), pf.seed.unwrap_or(0), config, steps))
        }
        Command::Estimate => {
            let path = need_config(cli, "estimate")?;
            let mut ec: EstimateConfig = load_json(&path, "estimate config")?;
            if let Some(s) = cli.seed {
                ec.seed = s;
            }
            let v = commands::run_estimate(&ec, &base_dir(&path))?;
            let config = serde_json::to_value(&ec).expect("config serializes");
            emit(cli, &Report::new("estimate", ec.seed, config, vec![Step::info("estimate", v)]))
        }
        Command::Sweep { param, grid } => {
            let path = need_config(cli, "sweep")?;
            let mut ec: EstimateConfig = load_json(&path, "sweep inner config")?;
            if let Some(s) = cli.seed {
                ec.seed = s;
            }
            let param = match param.as_str() {
                "eta" => SweepParam::Eta,
                "n" => SweepParam::N,
                _ => SweepParam::Epsilon,
            };
            let rows = commands::run_sweep(&ec, &base_dir(&path), param, grid)?;
            let text = match cli.format {
                Format::Csv => commands::sweep_csv(param, &rows),
                Format::Json => {
                    let steps = rows
                        .iter()
                        .map(|r| match r {
                            Ok(row) => Step::info(format!("{}={}", param.name(), row.value), row),
                            Err(e) => Step::new(param.name(), report::StepVerdict::Fail, json!({ "error": e })),
                        })
                        .collect();
                    let config = json!({ "param": param.name(), "grid": grid, "inner": ec });
                    Report::new("sweep", ec.seed, config, steps).to_json()
                }
            };
            if let Some(dir) = &cli.out {
                write_out(dir, &format!("sweep.{}", ext(cli.format)), &text)?;
            }
            // Inner failures are recorded in their rows; the sweep itself succeeds.
            Ok(Output {
                code: 0,
                stdout: text,
                stderr: String::new(),
            })
        }
    }
}

fn run_config(cli: &Cli, path: &Path, flags: serde_json::Map<String, Value>) -> Result<Report, CliError> {
    let raw: Value = parse_json(&read_text(path)?, "experiment config")?;
    let cfg: ExperimentConfig = serde_json::from_value(raw.clone()).map_err(|e| CliError::Config(format!("invalid experiment config: {e}")))?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let base = base_dir(path);
    let steps = match &cfg.scenario {
        ScenarioRef::Builtin(name) => {
            if !cfg.operations.is_empty() {
                return Err(CliError::Config("builtin scenarios take `params`, not `operations`".into()));
            }
            let mut params = match &cfg.params {
                Value::Null => serde_json::Map::new(),
                Value::Object(m) => m.clone(),
                _ => return Err(CliError::Config("`params` must be an object".into())),
            };
            params.extend(flags);
            if !scenarios::BUILTINS.contains(&name.as_str()) {
                return Err(CliError::Config(format!("unknown scenario `{name}`")));
            }
            scenarios::run_builtin(name, &Value::Object(params), seed)?
        }
        ScenarioRef::Problem { problem } => {
            let prob = problem.load(&base)?;
            commands::run_operations(&prob, &cfg, seed, &base)?
        }
    };
    let report = Report::new("run", seed, raw, steps);
    if let Some(dir) = &cfg.out {
        if cli.out.is_none() {
            write_out(&base.join(dir), &format!("report.{}", ext(cli.format)), &match cli.format {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv(),
            })?;
        }
    }
    Ok(report)
}
