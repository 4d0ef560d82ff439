//! Roughness estimation, variograms, the exact error decomposition of the
//! hybrid scheme and convergence-rate fitting.

mod mse;
mod roughness;
mod variogram;

pub use mse::{hybrid_mse, mse_study, rate_fit, tail_g_squared, MseEntry, MseReport};
pub use roughness::{roughness_study, KernelFamily, RoughnessReport, RoughnessRow, Scheme};
pub use variogram::{empirical_variogram, square_increment_dim};
