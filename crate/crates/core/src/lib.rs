//! Recursive Bayesian classification on the probability simplex.
//!
//! - [`simplex`]: points, Bayes update as a perturbation, special points,
//!   entropies and divergences.
//! - [`criteria`]: the stopping rules and their calibration to a shared
//!   confidence level.
//! - [`bounds`]: closed-form stop and false-stop probabilities.
//! - [`engine`]: the single-trial query/update/stop loop.
//! - [`montecarlo`] and [`tables`]: experiment harness and golden tables.
//! - [`cli`]: the command-line front end.

pub mod bounds;
pub mod cli;
pub mod criteria;
pub mod engine;
pub mod error;
pub mod montecarlo;
pub mod simplex;
pub mod tables;

pub use criteria::{calibrate, Family, StoppingRule};
pub use engine::{run_trial, EvidenceModel, QueryScheme, TrialConfig, TrialOutcome};
pub use error::{Error, Result};
pub use montecarlo::{run_experiment, ExperimentConfig, ExperimentResult, PriorSpec};
pub use simplex::{oplus, otimes, LikelihoodVector, SimplexPoint};
