//! Similarity groups of dimensionless constructions with several dependent
//! parameters, renormalization groups from incomplete similarity, and
//! learning of the incomplete-similarity exponents from data.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod dimensions;
pub mod flows;
pub mod error;
pub mod groups;
pub mod learner;
pub mod linalg;
pub mod rational;

pub use error::{Error, Result};
