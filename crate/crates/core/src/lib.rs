//! Extreme-value asymptotics for Gaussian fields whose variance is maximal on a submanifold.

pub mod asymptotics;
pub mod constants;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod simulate;
pub mod specfun;
pub mod zoo;

pub use error::{Error, Result};
