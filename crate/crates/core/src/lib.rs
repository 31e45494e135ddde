//! Fair binary classification on tabular data when the sensitive attribute
//! is withheld from training.
//!
//! The pipeline has two stages. An identification stage fits a logistic
//! regression and splits the training rows by prediction confidence. A
//! refinement stage trains a high-confidence classifier on ground truth while
//! repeatedly blending in the weights of a low-confidence classifier that only
//! ever learns from the high-confidence model's pseudo-labels and is rolled
//! back after every cycle. A bounded, learnable input perturbation is added to
//! the high-confidence classifier's inputs.
//!
//! Alongside training, [`metrics`] and [`confidence`] provide the group
//! fairness audit (demographic parity, equalised odds, signed rate gaps) and
//! the confidence-stratified bias analysis.

pub mod cli;
pub mod confidence;
pub mod data;
pub mod error;
pub mod metrics;
pub mod models;
pub mod parallel;
pub mod reckoner;
pub mod rng;
pub mod sigfig;

pub use error::{Error, ErrorKind, Result};
