//! Simulation and analysis of volatility modulated moving average (VMMA)
//! random fields on two-dimensional grids.

pub mod analysis;
pub mod cli;
pub mod covariance;
pub mod error;
pub mod fields;
pub mod kernels;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
