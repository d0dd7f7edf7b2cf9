//! Persuasion rates at a regression-discontinuity cutoff.
//!
//! The crate estimates the share of units that a treatment moves from an
//! outcome of 0 to an outcome of 1, identified from the limits of outcome and
//! exposure probabilities on either side of a cutoff in a running variable.
//! It covers local polynomial boundary fits, point and bound estimands,
//! confidence intervals, the choice of estimand for a given design, exact
//! identification checks by enumeration, and Monte Carlo studies.

pub mod error;
pub mod estimands;
pub mod exec;
pub mod inference;
pub mod locpoly;
pub mod oracle;
pub mod sample;
pub mod sim;
mod wls;

pub use error::{Error, Result};
pub use exec::Exec;
pub use sample::{DataScenario, DesignKind, ExposureLimits, Observation, Sample, Side};
