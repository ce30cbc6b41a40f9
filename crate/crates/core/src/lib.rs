//! Interference statistics for a bounded 1D mobile network with random
//! blockage.
//!
//! The crate pairs closed-form moment and correlation formulas (mean and
//! second moment of interference, spatial and temporal cross-correlation
//! terms, Pearson coefficients) with an independent ensemble Monte Carlo
//! simulator that serves as their oracle. Mobility follows a discrete
//! random-waypoint model on the lattice {1, .., N}; obstacles form a Poisson
//! field with per-obstacle uniform power retention.

pub mod analytics;
pub mod blockage;
pub mod error;
pub mod experiment;
pub mod mobility;
pub mod montecarlo;

pub use error::{Error, Result};
