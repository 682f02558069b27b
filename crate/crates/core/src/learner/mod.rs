//! Learning incomplete-similarity exponents from dimensionless data.
//!
//! A model predicts `ln Π` as a learnable power-law prefactor of the
//! scaling variables plus a dense network evaluated on renormalized
//! arguments; training both parts jointly by Adam yields the exponents.
//! [`collapse`] then maps the data to renormalized coordinates.

pub mod collapse;
pub mod model;
pub mod train;

pub use collapse::{collapse, collapse_quality, CollapsedTable};
pub use model::{Activation, ExponentModel, InputStats};
pub use train::{train, FitResult, TrainConfig, Trained};
