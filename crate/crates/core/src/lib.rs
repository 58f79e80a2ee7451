//! Evaluating unsupervised concept-based explanations of text classifiers
//! by how well a simulator can predict the classifier from them.
//!
//! The pipeline: fit a concept space on a model's latent embeddings
//! ([`concepts`]), attribute predictions to concepts ([`attribution`]),
//! describe concepts in words ([`interpretation`]), build prompts and score
//! a simulator's guesses ([`simulatability`]), then aggregate accuracies
//! into rankings ([`analysis`]) and compare them with cheaper proxy
//! measures ([`metrics`]).

pub mod analysis;
pub mod attribution;
pub mod concepts;
pub mod corpus;
pub mod error;
pub mod interpretation;
pub mod linalg;
pub mod metrics;
pub mod simulatability;

pub use error::{Error, Result};
