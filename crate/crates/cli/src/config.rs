//! Configuration documents: problems, estimator experiments, verification
//! plans and experiment configs. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use fastrates_core::conditions::{PairSet, TauFunction, VFunction};
use fastrates_core::estimators::EstimatorKind;
use fastrates_core::verify::{Exactness, MainBranch};
use fastrates_core::FiniteProblem;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// A problem given inline or as a path (relative to the enclosing document).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    Path(PathBuf),
    Inline(FiniteProblem),
}

impl ProblemSource {
    pub fn load(&self, base: &Path) -> Result<FiniteProblem, CliError> {
        match self {
            ProblemSource::Inline(p) => Ok(p.clone()),
            ProblemSource::Path(p) => load_problem(&base.join(p)),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid {what}: {e}")))
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    parse_json(&read_text(path)?, what)
}

pub fn load_problem(path: &Path) -> Result<FiniteProblem, CliError> {
    load_json(path, "problem")
}

pub fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Parameters of `check <condition>`; which fields are required depends on the condition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    pub eta: Option<f64>,
    pub u: Option<f64>,
    pub c: Option<f64>,
    pub beta: Option<f64>,
    pub b: Option<f64>,
    pub kappa: Option<f64>,
    pub epsilon: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub tau: Option<TauFunction>,
    pub v: Option<VFunction>,
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub search_comparator: bool,
    pub pairs: Option<PairSet>,
}

pub fn need<T: Copy>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing parameter `{name}`")))
}

/// `{"problem": <file>, "prior": [...], "eta": x, "n": k, "estimator": "bayes"|"twopart"|"erm", "seed": s}`;
/// `replicates`, `v` and `eps` are used by sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub problem: ProblemSource,
    pub prior: Option<Vec<f64>>,
    pub eta: f64,
    pub n: usize,
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub seed: u64,
    pub replicates: Option<usize>,
    pub v: Option<VFunction>,
    pub eps: Option<f64>,
}

/// Plan document of `verify <inequality>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyPlanFile {
    pub problem: ProblemSource,
    pub n: usize,
    pub estimator: EstimatorKind,
    pub eta: f64,
    pub prior: Option<Vec<f64>>,
    pub exactness: Option<Exactness>,
    pub tol: Option<f64>,
    pub eta_bar: Option<f64>,
    #[serde(default)]
    pub rescaled: bool,
    pub u: Option<f64>,
    pub c: Option<f64>,
    pub tau: Option<TauFunction>,
    pub lambda: Option<f64>,
    pub v: Option<VFunction>,
    pub eps: Option<f64>,
    pub branch: Option<MainBranch>,
    pub deltas: Option<Vec<f64>>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
}

/// Builtin scenario name, or an inline/path problem with a list of operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Builtin(String),
    Problem {
        problem: ProblemSource,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioRef,
    /// Builtin scenario parameters (`sigma_ratio`, `j_max`, ...).
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub operations: Vec<Operation>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Operation {
    pub op: OperationKind,
    pub condition: Option<String>,
    pub inequality: Option<String>,
    #[serde(default)]
    pub params: Value,
    /// For checks: whether the condition is expected to hold.
    pub expect: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationKind {
    Check,
    CentralEta,
    Grip,
    IcCheck,
    Estimate,
    Verify,
}

/// Parameters of operations other than `check` and `verify`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpParams {
    pub eta: Option<f64>,
    pub n: Option<usize>,
    pub cap: Option<f64>,
    pub mini: Option<usize>,
    pub estimator: Option<EstimatorKind>,
    pub prior: Option<Vec<f64>>,
}

pub fn from_value<T: serde::de::DeserializeOwned>(v: &Value, what: &str) -> Result<T, CliError> {
    let v = if v.is_null() { Value::Object(Default::default()) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| CliError::Config(format!("invalid {what}: {e}")))
}
