//! Exp-VMMA volatility `sigma = exp(X' / 2)`.

use crate::error::Result;
use crate::kernels::KernelSpec;

use super::fft::Square;
use super::hybrid::HybridEngine;
use super::rng::StreamRole;
use super::SchemeParams;

/// `exp(x / 2)` pointwise, so that `sigma^2 = exp(x)`.
pub fn sigma_from_log_field(x: &Square) -> Square {
    Square {
        side: x.side,
        data: x.data.iter().map(|v| (0.5 * v).exp()).collect(),
    }
}

/// Simulates `X'` with the hybrid scheme (`sigma' = 1`) on `{-half..half}^2 / n`
/// and returns `exp(X' / 2)`. The seed of `params` drives `X'` through
/// streams disjoint from those of the outer field.
pub fn exp_vmma_volatility(inner_kernel: &KernelSpec, params: &SchemeParams, half: usize) -> Result<Square> {
    let engine = HybridEngine::new(inner_kernel, params, half)?;
    let x = engine.simulate_with(
        params.seed,
        params.replicate,
        None,
        StreamRole::Volatility,
        StreamRole::VolatilityPlain,
    )?;
    Ok(sigma_from_log_field(&x))
}
