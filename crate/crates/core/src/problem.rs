//! Finite learning problems `(P, loss, F)`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::numeric::{expect, INF};

/// Tolerance on `Σ probs = 1`.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Which standard loss generated a loss matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum LossKind {
    SquaredLoss,
    ZeroOneLoss,
    /// `table[f][z]` is the density of predictor `f` at outcome `z` with
    /// respect to a base measure with weights `base_weights[z]`.
    LogLoss {
        table: Vec<Vec<f64>>,
        base_weights: Vec<f64>,
    },
}

impl LossKind {
    /// Log-loss tables must hold densities; rows integrate to one against
    /// the base weights when `require_normalized` is set.
    pub fn validate(&self, require_normalized: bool) -> Result<()> {
        if let LossKind::LogLoss {
            table,
            base_weights,
        } = self
        {
            for (f, row) in table.iter().enumerate() {
                if row.len() != base_weights.len() {
                    return invalid(format!("density row {f} has wrong length"));
                }
                if row.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
                    return invalid(format!("density row {f} has a negative or non-finite entry"));
                }
                if require_normalized {
                    let mass: f64 = row.iter().zip(base_weights).map(|(d, w)| d * w).sum();
                    if (mass - 1.0).abs() > PROB_SUM_TOL {
                        return invalid(format!("density row {f} integrates to {mass}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Pointwise loss of a prediction against a target (squared and 0-1 only).
    pub fn pointwise(&self, prediction: f64, target: f64) -> f64 {
        match self {
            LossKind::SquaredLoss => (prediction - target).powi(2),
            LossKind::ZeroOneLoss => {
                if prediction == target {
                    0.0
                } else {
                    1.0
                }
            }
            LossKind::LogLoss { .. } => panic!("log loss is defined by its density table"),
        }
    }
}

/// What the excess loss of a predictor is measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Comparator {
    /// A fixed predictor `f*` (usually the risk minimizer).
    Static(usize),
    /// An arbitrary pseudo-loss over outcomes, e.g. a GRIP loss.
    PseudoLoss(Vec<f64>),
    /// A comparator map `f ↦ φ(f)` given as one pseudo-loss per predictor.
    PerPredictor(Vec<Vec<f64>>),
}

impl Comparator {
    /// Loss vector that `f` is compared with.
    pub fn loss_for<'a>(&'a self, problem: &'a FiniteProblem, f: usize) -> &'a [f64] {
        match self {
            Comparator::Static(i) => problem.loss_row(*i),
            Comparator::PseudoLoss(v) => v,
            Comparator::PerPredictor(m) => &m[f],
        }
    }

    fn validate(&self, problem: &FiniteProblem) -> Result<()> {
        let nz = problem.num_outcomes();
        let check = |v: &[f64]| -> Result<()> {
            if v.len() != nz {
                return invalid("comparator length differs from outcome count");
            }
            if v.iter().any(|x| x.is_nan() || *x == f64::NEG_INFINITY) {
                return invalid("comparator loss is NaN or −∞");
            }
            Ok(())
        };
        match self {
            Comparator::Static(i) => {
                if *i >= problem.num_predictors() {
                    return Err(Error::IndexOutOfRange {
                        index: *i,
                        len: problem.num_predictors(),
                    });
                }
                Ok(())
            }
            Comparator::PseudoLoss(v) => check(v),
            Comparator::PerPredictor(m) => {
                if m.len() != problem.num_predictors() {
                    return invalid("comparator map needs one row per predictor");
                }
                m.iter().try_for_each(|v| check(v))
            }
        }
    }
}

/// A learning problem on finitely many outcomes and predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProblem {
    outcomes: Vec<String>,
    probs: Vec<f64>,
    loss: Vec<Vec<f64>>,
    labels: Vec<String>,
    comparator: usize,
    predictions: Option<Vec<Vec<f64>>>,
}

impl FiniteProblem {
    /// Builds a problem from a probability vector and an `|F| × |Z|` loss matrix.
    pub fn new(probs: Vec<f64>, loss: Vec<Vec<f64>>) -> Result<Self> {
        let outcomes = (0..probs.len()).map(|z| format!("z{z}")).collect();
        let labels = (0..loss.len()).map(|f| format!("f{f}")).collect();
        Self::with_names(outcomes, probs, loss, labels, None)
    }

    /// Full constructor; `comparator` is computed when `None`.
    pub fn with_names(
        outcomes: Vec<String>,
        probs: Vec<f64>,
        loss: Vec<Vec<f64>>,
        labels: Vec<String>,
        comparator: Option<usize>,
    ) -> Result<Self> {
        if probs.is_empty() {
            return invalid("no outcomes");
        }
        if loss.is_empty() {
            return invalid("no predictors");
        }
        if outcomes.len() != probs.len() || labels.len() != loss.len() {
            return invalid("label counts do not match the matrix");
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return invalid("probabilities must be finite and nonnegative");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return invalid(format!("probabilities sum to {total}"));
        }
        for (f, row) in loss.iter().enumerate() {
            if row.len() != probs.len() {
                return invalid(format!("loss row {f} has length {}", row.len()));
            }
            if row.iter().any(|x| x.is_nan() || *x == f64::NEG_INFINITY) {
                return invalid(format!("loss row {f} contains NaN or −∞"));
            }
        }
        let mut p = FiniteProblem {
            outcomes,
            probs,
            loss,
            labels,
            comparator: 0,
            predictions: None,
        };
        p.comparator = match comparator {
            Some(i) if i < p.loss.len() => {
                if !p.risk(i)?.is_finite() {
                    return Err(Error::InfiniteComparator);
                }
                i
            }
            Some(i) => {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: p.loss.len(),
                })
            }
            None => p.find_comparator()?,
        };
        Ok(p)
    }

    /// Supervised problem: outcome `z` carries target `targets[z]` and
    /// `predictions[f][z]` is what `f` predicts at the input of `z`.
    pub fn supervised(
        probs: Vec<f64>,
        targets: &[f64],
        predictions: Vec<Vec<f64>>,
        kind: &LossKind,
    ) -> Result<Self> {
        if targets.len() != probs.len() {
            return invalid("one target per outcome required");
        }
        let loss = predictions
            .iter()
            .map(|row| {
                row.iter()
                    .zip(targets)
                    .map(|(&a, &y)| kind.pointwise(a, y))
                    .collect()
            })
            .collect();
        let mut p = Self::new(probs, loss)?;
        p.attach_predictions(predictions)?;
        Ok(p)
    }

    /// Log-loss problem: `loss_f(z) = −ln density_f(z)` (`+∞` where the density vanishes).
    pub fn log_loss(probs: Vec<f64>, kind: &LossKind) -> Result<Self> {
        kind.validate(false)?;
        let LossKind::LogLoss { table, .. } = kind else {
            return invalid("log_loss needs a LogLoss table");
        };
        let loss = table
            .iter()
            .map(|row| row.iter().map(|&d| if d > 0.0 { -d.ln() } else { INF }).collect())
            .collect();
        Self::new(probs, loss)
    }

    /// Attaches the prediction matrix needed by the small-ball checks.
    pub fn attach_predictions(&mut self, predictions: Vec<Vec<f64>>) -> Result<()> {
        if predictions.len() != self.num_predictors()
            || predictions.iter().any(|r| r.len() != self.num_outcomes())
        {
            return invalid("prediction matrix must be |F| × |Z|");
        }
        self.predictions = Some(predictions);
        Ok(())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.loss.len() {
            return invalid("one label per predictor required");
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_outcomes(mut self, outcomes: Vec<String>) -> Result<Self> {
        if outcomes.len() != self.probs.len() {
            return invalid("one name per outcome required");
        }
        self.outcomes = outcomes;
        Ok(self)
    }

    pub fn num_outcomes(&self) -> usize {
        self.probs.len()
    }

    pub fn num_predictors(&self) -> usize {
        self.loss.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn loss_matrix(&self) -> &[Vec<f64>] {
        &self.loss
    }

    pub fn loss_row(&self, f: usize) -> &[f64] {
        &self.loss[f]
    }

    pub fn loss(&self, f: usize, z: usize) -> f64 {
        self.loss[f][z]
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn predictions(&self) -> Option<&[Vec<f64>]> {
        self.predictions.as_deref()
    }

    /// Index of the comparator `f*`.
    pub fn comparator(&self) -> usize {
        self.comparator
    }

    fn check_index(&self, f: usize) -> Result<()> {
        if f >= self.loss.len() {
            return Err(Error::IndexOutOfRange {
                index: f,
                len: self.loss.len(),
            });
        }
        Ok(())
    }

    /// `E_P[loss_f]`, `+∞` if a mass-carrying entry is infinite.
    pub fn risk(&self, f: usize) -> Result<f64> {
        self.check_index(f)?;
        Ok(expect(&self.probs, &self.loss[f]))
    }

    /// `risk(f) − risk(comparator)`.
    pub fn excess_risk(&self, f: usize, comparator: usize) -> Result<f64> {
        self.check_index(comparator)?;
        let rc = self.risk(comparator)?;
        if !rc.is_finite() {
            return Err(Error::InfiniteComparator);
        }
        Ok(self.risk(f)? - rc)
    }

    /// Risk minimizer, smallest index on ties.
    pub fn find_comparator(&self) -> Result<usize> {
        let mut best: Option<(usize, f64)> = None;
        for f in 0..self.loss.len() {
            let r = self.risk(f)?;
            if r.is_finite() && best.map_or(true, |(_, b)| r < b) {
                best = Some((f, r));
            }
        }
        best.map(|(f, _)| f).ok_or(Error::AllRisksInfinite)
    }

    /// Excess-loss view of `f` against `comparator`.
    pub fn excess_loss<'a>(
        &'a self,
        f: usize,
        comparator: &'a Comparator,
    ) -> Result<ExcessLossView<'a>> {
        self.check_index(f)?;
        comparator.validate(self)?;
        let base = comparator.loss_for(self, f);
        for z in 0..self.num_outcomes() {
            if self.probs[z] > 0.0 && base[z] == INF {
                return invalid(format!("comparator loss is infinite at mass-carrying outcome {z}"));
            }
        }
        Ok(ExcessLossView {
            problem: self,
            f_index: f,
            comparator,
        })
    }

    /// `L_f` against the problem's own comparator `f*`, as a vector.
    pub fn excess_vector(&self, f: usize) -> Vec<f64> {
        excess_values(&self.loss[f], &self.loss[self.comparator], &self.probs)
    }

    /// Replaces the outcome distribution (same support and losses).
    pub fn with_probs(&self, probs: Vec<f64>) -> Result<Self> {
        let mut p = Self::with_names(
            self.outcomes.clone(),
            probs,
            self.loss.clone(),
            self.labels.clone(),
            None,
        )?;
        p.predictions = self.predictions.clone();
        Ok(p)
    }

    /// Restricts the predictor set to `keep` (in the given order).
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        for &f in keep {
            self.check_index(f)?;
        }
        let loss = keep.iter().map(|&f| self.loss[f].clone()).collect();
        let labels = keep.iter().map(|&f| self.labels[f].clone()).collect();
        let mut p = Self::with_names(self.outcomes.clone(), self.probs.clone(), loss, labels, None)?;
        if let Some(pr) = &self.predictions {
            p.predictions = Some(keep.iter().map(|&f| pr[f].clone()).collect());
        }
        Ok(p)
    }

    /// Same problem with a different loss matrix (predictor count may change).
    pub fn with_loss(&self, loss: Vec<Vec<f64>>, comparator: Option<usize>) -> Result<Self> {
        let labels = if loss.len() == self.labels.len() {
            self.labels.clone()
        } else {
            (0..loss.len()).map(|f| format!("f{f}")).collect()
        };
        Self::with_names(self.outcomes.clone(), self.probs.clone(), loss, labels, comparator)
    }
}

/// `loss − base` with the conventions used for excess losses: entries at
/// zero-mass outcomes where the difference is undefined are set to 0.
pub fn excess_values(loss: &[f64], base: &[f64], probs: &[f64]) -> Vec<f64> {
    loss.iter()
        .zip(base)
        .zip(probs)
        .map(|((&l, &b), &p)| {
            if b == INF {
                if p > 0.0 {
                    f64::NAN
                } else {
                    0.0
                }
            } else {
                l - b
            }
        })
        .collect()
}

/// Excess loss `L_f = loss_f − loss_comparator` of one predictor.
#[derive(Debug, Clone, Copy)]
pub struct ExcessLossView<'a> {
    pub problem: &'a FiniteProblem,
    pub f_index: usize,
    pub comparator: &'a Comparator,
}

impl<'a> ExcessLossView<'a> {
    pub fn values(&self) -> Vec<f64> {
        excess_values(
            self.problem.loss_row(self.f_index),
            self.comparator.loss_for(self.problem, self.f_index),
            self.problem.probs(),
        )
    }

    /// `E[L_f]`.
    pub fn mean(&self) -> f64 {
        expect(self.problem.probs(), &self.values())
    }
}

// ---------------------------------------------------------------------------
// JSON form

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JsonNum {
    Num(f64),
    Text(String),
}

fn to_json_num(x: f64) -> JsonNum {
    if x == INF {
        JsonNum::Text("inf".into())
    } else {
        JsonNum::Num(x)
    }
}

fn from_json_num(v: JsonNum) -> std::result::Result<f64, String> {
    match v {
        JsonNum::Num(x) => Ok(x),
        JsonNum::Text(s) if s == "inf" || s == "+inf" || s == "Infinity" => Ok(INF),
        JsonNum::Text(s) => Err(format!("unexpected loss entry {s:?}")),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemJson {
    outcomes: Vec<String>,
    probs: Vec<f64>,
    loss_matrix: Vec<Vec<JsonNum>>,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    comparator_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    predictions: Option<Vec<Vec<f64>>>,
}

impl Serialize for FiniteProblem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProblemJson {
            outcomes: self.outcomes.clone(),
            probs: self.probs.clone(),
            loss_matrix: self
                .loss
                .iter()
                .map(|r| r.iter().map(|&x| to_json_num(x)).collect())
                .collect(),
            labels: self.labels.clone(),
            comparator_index: Some(self.comparator),
            predictions: self.predictions.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteProblem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = ProblemJson::deserialize(d)?;
        let loss = j
            .loss_matrix
            .into_iter()
            .map(|r| r.into_iter().map(from_json_num).collect::<std::result::Result<Vec<_>, _>>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        let mut p = FiniteProblem::with_names(j.outcomes, j.probs, loss, j.labels, j.comparator_index)
            .map_err(D::Error::custom)?;
        if let Some(pr) = j.predictions {
            p.attach_predictions(pr).map_err(D::Error::custom)?;
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_loss_constant_half() {
        let p = FiniteProblem::supervised(
            vec![0.5, 0.5],
            &[0.0, 1.0],
            vec![vec![0.5, 0.5]],
            &LossKind::SquaredLoss,
        )
        .unwrap();
        assert_eq!(p.risk(0).unwrap(), 0.25);
    }

    #[test]
    fn ties_go_to_smallest_index() {
        let p = FiniteProblem::new(vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(p.comparator(), 0);
        let single = FiniteProblem::new(vec![1.0], vec![vec![3.0]]).unwrap();
        assert_eq!(single.find_comparator().unwrap(), 0);
    }

    #[test]
    fn infinite_entries_and_zero_mass() {
        let p = FiniteProblem::new(vec![1.0, 0.0], vec![vec![1.0, INF], vec![INF, 0.0]]).unwrap();
        assert_eq!(p.risk(0).unwrap(), 1.0);
        assert_eq!(p.risk(1).unwrap(), INF);
        assert_eq!(p.comparator(), 0);
        assert!(FiniteProblem::new(vec![1.0], vec![vec![INF]]).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(FiniteProblem::new(vec![0.5, 0.4], vec![vec![0.0, 0.0]]).is_err());
        assert!(FiniteProblem::new(vec![1.0], vec![vec![f64::NEG_INFINITY]]).is_err());
        let p = FiniteProblem::new(vec![1.0], vec![vec![0.0]]).unwrap();
        assert!(matches!(p.risk(3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn json_round_trip_with_infinity() {
        let p = FiniteProblem::new(vec![0.25, 0.75], vec![vec![1.0, INF], vec![0.5, 2.0]]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"inf\""));
        let q: FiniteProblem = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        let bad = r#"{"outcomes":["a"],"probs":[1.0],"loss_matrix":[[0]],"labels":["f"],"extra":1}"#;
        assert!(serde_json::from_str::<FiniteProblem>(bad).is_err());
    }
}
