//! Forward model and analysis pipeline for dispersive qubit readout through a
//! nonreciprocal phase-sensitive parametric amplifier.
//!
//! All physical quantities are SI: angular frequencies and rates in rad/s
//! (or 1/s), times in seconds. Unit conversion from laboratory units lives in
//! the configuration layer of `readout-sim`.

pub mod coupled_mode;
pub mod dephasing;
pub mod error;
pub mod estimation;
pub mod fit;
pub mod flux_tuning;
pub mod linalg;
pub mod noise_cascade;
pub mod quad;
pub mod rng;
pub mod stochastic;

pub use error::{Error, Result};
