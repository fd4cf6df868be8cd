//! Report model and emitters.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepVerdict {
    Pass,
    Fail,
    Inconclusive,
    /// Reported values with nothing asserted.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub name: String,
    pub verdict: StepVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    pub result: Value,
}

impl Step {
    pub fn new(name: impl Into<String>, verdict: StepVerdict, result: impl Serialize) -> Self {
        Step {
            name: name.into(),
            verdict,
            expected: None,
            result: serde_json::to_value(result).expect("serializable result"),
        }
    }

    pub fn check(name: impl Into<String>, ok: bool, result: impl Serialize) -> Self {
        Self::new(name, if ok { StepVerdict::Pass } else { StepVerdict::Fail }, result)
    }

    /// A step whose observed boolean must match an expectation (e.g. a condition that should fail).
    pub fn expect(name: impl Into<String>, expected: bool, observed: bool, result: impl Serialize) -> Self {
        let mut s = Self::check(name, expected == observed, result);
        s.expected = Some(if expected { "holds" } else { "fails" }.to_string());
        s
    }

    pub fn info(name: impl Into<String>, result: impl Serialize) -> Self {
        Self::new(name, StepVerdict::Info, result)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub info: usize,
    pub verdict: StepVerdict,
}

/// Deterministic given the configuration and seed; no timing fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub steps: Vec<Step>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64, config: Value, steps: Vec<Step>) -> Self {
        let count = |v| steps.iter().filter(|s| s.verdict == v).count();
        let (pass, fail, inconclusive, info) = (
            count(StepVerdict::Pass),
            count(StepVerdict::Fail),
            count(StepVerdict::Inconclusive),
            count(StepVerdict::Info),
        );
        let verdict = if fail > 0 {
            StepVerdict::Fail
        } else if inconclusive > 0 {
            StepVerdict::Inconclusive
        } else {
            StepVerdict::Pass
        };
        Report {
            tool: "fastrates".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            summary: Summary {
                pass,
                fail,
                inconclusive,
                info,
                verdict,
            },
            steps,
        }
    }

    pub fn exit_code(&self) -> i32 {
        verdict_code(self.summary.verdict)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per step with the scalar fields of its result flattened.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "verdict", "expected", "key", "value"]).expect("in-memory write");
        for s in &self.steps {
            let verdict = serde_json::to_value(s.verdict).expect("verdict").as_str().unwrap_or("").to_string();
            let expected = s.expected.clone().unwrap_or_default();
            let mut scalars = Vec::new();
            flatten_scalars("", &s.result, &mut scalars);
            if scalars.is_empty() {
                w.write_record([s.name.as_str(), &verdict, &expected, "", ""]).expect("in-memory write");
            }
            for (k, v) in scalars {
                w.write_record([s.name.as_str(), &verdict, &expected, &k, &v]).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

pub fn verdict_code(v: StepVerdict) -> i32 {
    match v {
        StepVerdict::Pass | StepVerdict::Info => 0,
        StepVerdict::Fail => 1,
        StepVerdict::Inconclusive => 2,
    }
}

fn flatten_scalars(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_scalars(&key, x, out);
            }
        }
        Value::Array(a) => {
            if a.len() <= 16 {
                for (i, x) in a.iter().enumerate() {
                    flatten_scalars(&format!("{prefix}[{i}]"), x, out);
                }
            }
        }
        Value::Null => {}
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_verdicts() {
        let r = Report::new("t", 0, Value::Null, vec![Step::check("a", true, 1.0), Step::info("b", 2.0)]);
        assert_eq!(r.exit_code(), 0);
        let r = Report::new("t", 0, Value::Null, vec![Step::expect("a", false, true, 1.0)]);
        assert_eq!(r.exit_code(), 1);
        assert!(r.to_csv().starts_with("step,verdict"));
    }
}
