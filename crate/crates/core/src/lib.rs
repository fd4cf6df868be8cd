//! Generalized-Bayes and MDL risk bounds on finite learning problems:
//! information complexity, exponential stochastic inequalities, GRIP,
//! easiness conditions and exact or Monte-Carlo verification.

pub mod conditions;
pub mod divergences;
pub mod error;
pub mod esi;
pub mod estimators;
pub mod expfam;
pub mod grip;
pub mod instances;
pub mod numeric;
pub mod problem;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use problem::{Comparator, FiniteProblem, LossKind};
