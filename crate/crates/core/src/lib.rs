//! Crowdsourced label quality control and pool-based active learning for
//! short-text classification.

pub mod corpus;
pub mod crowd_qc;
pub mod error;
pub mod learners;
pub mod rng;
pub mod simulator;
pub mod strategies;

pub use error::{Error, Result};
