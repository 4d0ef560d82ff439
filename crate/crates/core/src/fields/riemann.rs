//! Riemann-sum scheme: step kernel on every cell of the truncation window.

use crate::covariance::{optimal_b_norm, PointMode};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

use super::fft::{Square, ValidConvolver};
use super::grid::FieldGrid;
use super::rng::{fill_normal, stream, StreamRole};
use super::{symmetric_square, SchemeParams, VolatilityModel};

/// Kernel matrix on `{-N..N}^2` with entries `g(b_j / n)`; the central cell
/// uses the optimal norm so that `b_0 != 0`.
pub fn riemann_kernel_matrix(kernel: &KernelSpec, params: &SchemeParams) -> Result<Square> {
    let n = params.n as f64;
    let alpha = kernel.alpha();
    let mode = params.policy.mode;
    symmetric_square(params.truncation(), |a, b| {
        let norm = if a == 0 {
            optimal_b_norm((0, 0), alpha)?
        } else {
            match mode {
                PointMode::Midpoint => (a as f64).hypot(b as f64),
                PointMode::OptimalNorm => optimal_b_norm((a, b), alpha)?,
            }
        };
        kernel.eval_g(norm / n)
    })
}

/// Precomputed Riemann-sum scheme, reusable across replicates.
#[derive(Clone)]
pub struct RiemannEngine {
    params: SchemeParams,
    convolver: ValidConvolver,
}

impl RiemannEngine {
    pub fn new(kernel: &KernelSpec, params: &SchemeParams) -> Result<Self> {
        params.validate()?;
        let a = riemann_kernel_matrix(kernel, params)?;
        let b_side = 2 * (params.truncation() + params.n) + 1;
        Ok(RiemannEngine {
            params: *params,
            convolver: ValidConvolver::new(&a, b_side)?,
        })
    }

    /// Simulates one replicate on `{-n..n}^2`; `sigma` covers `{-N-n..N+n}^2`.
    pub fn simulate(&self, seed: u64, replicate: u64, sigma: Option<&Square>) -> Result<Square> {
        let side = 2 * (self.params.truncation() + self.params.n) + 1;
        if let Some(s) = sigma {
            if s.side != side {
                return Err(Error::Validation(format!(
                    "volatility side {} does not match the noise side {side}",
                    s.side
                )));
            }
        }
        let mut data = vec![0.0; side * side];
        fill_normal(&mut stream(seed, replicate, StreamRole::Plain), &mut data);
        let inv_n = 1.0 / self.params.n as f64;
        for (idx, w) in data.iter_mut().enumerate() {
            *w *= inv_n * sigma.map_or(1.0, |s| s.data[idx]);
        }
        self.convolver.apply(&Square { side, data })
    }
}

/// Riemann-sum realization on `{-n..n}^2 / n`; independent of `kappa`.
pub fn riemann_simulate(kernel: &KernelSpec, params: &SchemeParams, vol: &VolatilityModel) -> Result<FieldGrid> {
    vol.validate(kernel)?;
    let engine = RiemannEngine::new(kernel, params)?;
    let sigma = vol.resolve(params)?;
    let out = engine.simulate(params.seed, params.replicate, sigma.as_ref())?;
    let values = match vol.constant_value() {
        Some(c) if c != 1.0 => out.data.iter().map(|v| c * v).collect(),
        _ => out.data,
    };
    FieldGrid::on_unit_square(params.n, values)
}
