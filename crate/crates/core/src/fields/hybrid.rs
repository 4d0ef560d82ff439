//! Hybrid scheme: exact power kernel on the central cells, step kernel elsewhere.

use crate::covariance::{
    cell_index, central_cells, optimal_b_norm, power_cell_weights, CovarianceBlock, PointMode,
    DEFAULT_CROSS_TOL,
};
use crate::error::Result;
use crate::kernels::KernelSpec;

use super::fft::{Square, ValidConvolver};
use super::grid::FieldGrid;
use super::rng::{fill_normal, stream, StreamRole};
use super::{symmetric_square, SchemeParams, VolatilityModel};

/// Absolute tolerance of the central-cell weight quadrature.
const WEIGHT_TOL: f64 = 1e-12;

/// One draw of the two noise families for an output square of half-width `m`.
#[derive(Debug, Clone)]
pub struct NoiseSample {
    /// Half-width `m + kappa` of the square carrying the correlated family.
    pub inner_half: usize,
    /// Half-width `N + m` of the full noise square.
    pub outer_half: usize,
    /// Correlated vectors, `dim` entries per cell of the inner square, cells in array layout.
    pub correlated: Vec<f64>,
    /// Length of each correlated vector, `(2 kappa + 1)^2 + 1`.
    pub dim: usize,
    /// Plain cell noise on the full square; inside the inner square these are
    /// the last components of the correlated vectors.
    pub plain: Square,
}

/// Draws the correlated family on `{-m-kappa..m+kappa}^2` (`chol z` per
/// cell) and independent `N(0, 1/n^2)` plain noise on the rest of
/// `{-N-m..N+m}^2`.
pub fn sample_noise(params: &SchemeParams, block: &CovarianceBlock, m: usize) -> NoiseSample {
    sample_noise_with(params, block, m, StreamRole::Correlated, StreamRole::Plain)
}

pub(crate) fn sample_noise_with(
    params: &SchemeParams,
    block: &CovarianceBlock,
    m: usize,
    correlated_role: StreamRole,
    plain_role: StreamRole,
) -> NoiseSample {
    let n = params.n as f64;
    let inner_half = m + params.kappa;
    let outer_half = params.truncation() + m;
    let inner_side = 2 * inner_half + 1;
    let outer_side = 2 * outer_half + 1;
    let dim = block.dim();
    let chol = block.chol();

    let mut rng = stream(params.seed, params.replicate, correlated_role);
    let mut z = vec![0.0; dim];
    let mut correlated = vec![0.0; inner_side * inner_side * dim];
    for cell in correlated.chunks_exact_mut(dim) {
        fill_normal(&mut rng, &mut z);
        for (r, out) in cell.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (c, zc) in z.iter().enumerate().take(r + 1) {
                acc += chol[(r, c)] * zc;
            }
            *out = acc;
        }
    }

    let mut plain = vec![0.0; outer_side * outer_side];
    let mut rng = stream(params.seed, params.replicate, plain_role);
    let lo = outer_half - inner_half;
    let hi = outer_half + inner_half;
    for row in 0..outer_side {
        let inner_row = (lo..=hi).contains(&row);
        for col in 0..outer_side {
            let idx = row * outer_side + col;
            if inner_row && (lo..=hi).contains(&col) {
                let cell = (row - lo) * inner_side + (col - lo);
                plain[idx] = correlated[cell * dim + dim - 1];
            } else {
                let mut w = [0.0];
                fill_normal(&mut rng, &mut w);
                plain[idx] = w[0] / n;
            }
        }
    }
    NoiseSample {
        inner_half,
        outer_half,
        correlated,
        dim,
        plain: Square {
            side: outer_side,
            data: plain,
        },
    }
}

/// Step-kernel matrix `A` on `{-N..N}^2`: zero on the central cells and
/// `g(b_k / n)` elsewhere.
pub fn hybrid_kernel_matrix(kernel: &KernelSpec, params: &SchemeParams) -> Result<Square> {
    let n = params.n as f64;
    let kappa = params.kappa as i64;
    let alpha = kernel.alpha();
    let mode = params.policy.mode;
    symmetric_square(params.truncation(), |a, b| {
        if a <= kappa {
            return Ok(0.0);
        }
        let norm = match mode {
            PointMode::Midpoint => (a as f64).hypot(b as f64),
            PointMode::OptimalNorm => optimal_b_norm((a, b), alpha)?,
        };
        kernel.eval_g(norm / n)
    })
}

/// Precomputed pieces of the hybrid scheme for one kernel and discretization,
/// reusable across replicates.
#[derive(Clone)]
pub struct HybridEngine {
    params: SchemeParams,
    out_half: usize,
    block: CovarianceBlock,
    weights: Vec<f64>,
    convolver: ValidConvolver,
}

impl HybridEngine {
    /// Prepares the scheme for outputs on `{-m..m}^2 / n`.
    pub fn new(kernel: &KernelSpec, params: &SchemeParams, m: usize) -> Result<Self> {
        params.validate()?;
        let block = CovarianceBlock::build(kernel.alpha(), params.kappa, params.n, DEFAULT_CROSS_TOL)?;
        let weights = power_cell_weights(kernel, params.kappa, params.n, &params.policy, WEIGHT_TOL)?;
        let a = hybrid_kernel_matrix(kernel, params)?;
        let b_side = 2 * (params.truncation() + m) + 1;
        let convolver = ValidConvolver::new(&a, b_side)?;
        Ok(HybridEngine {
            params: *params,
            out_half: m,
            block,
            weights,
            convolver,
        })
    }

    pub fn block(&self) -> &CovarianceBlock {
        &self.block
    }

    /// Power-cell weights in block order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Simulates one replicate on `{-m..m}^2`; `sigma` covers `{-N-m..N+m}^2`
    /// (`None` means `sigma = 1`).
    pub fn simulate(&self, seed: u64, replicate: u64, sigma: Option<&Square>) -> Result<Square> {
        self.simulate_with(seed, replicate, sigma, StreamRole::Correlated, StreamRole::Plain)
    }

    pub(crate) fn simulate_with(
        &self,
        seed: u64,
        replicate: u64,
        sigma: Option<&Square>,
        correlated_role: StreamRole,
        plain_role: StreamRole,
    ) -> Result<Square> {
        let mut params = self.params;
        params.seed = seed;
        params.replicate = replicate;
        let m = self.out_half;
        let noise = sample_noise_with(&params, &self.block, m, correlated_role, plain_role);
        let outer_side = noise.plain.side;
        if let Some(s) = sigma {
            if s.side != outer_side {
                return Err(crate::error::Error::Validation(format!(
                    "volatility side {} does not match the noise side {outer_side}",
                    s.side
                )));
            }
        }
        let sigma_at = |idx: usize| sigma.map_or(1.0, |s| s.data[idx]);

        let b = Square {
            side: outer_side,
            data: noise
                .plain
                .data
                .iter()
                .enumerate()
                .map(|(idx, w)| sigma_at(idx) * w)
                .collect(),
        };
        let mut out = self.convolver.apply(&b)?;

        // Direct sum over the central cells.
        let kappa = self.params.kappa;
        let k = kappa as i64;
        let inner_side = 2 * noise.inner_half + 1;
        let shift = (self.params.truncation()) as i64;
        let side = 2 * m + 1;
        let cells = central_cells(kappa);
        for row in 0..side {
            for col in 0..side {
                let mut acc = 0.0;
                for &j in &cells {
                    let jc = cell_index(j, kappa);
                    // Cell i - j in inner-square and outer-square coordinates.
                    let ic = col as i64 - j.0 + k;
                    let ir = row as i64 - j.1 + k;
                    let inner = ir as usize * inner_side + ic as usize;
                    let outer = (ir + shift) as usize * outer_side + (ic + shift) as usize;
                    acc += self.weights[jc] * sigma_at(outer) * noise.correlated[inner * noise.dim + jc];
                }
                out.data[row * side + col] += acc;
            }
        }
        Ok(out)
    }
}

/// Hybrid-scheme realization on `{-n..n}^2 / n`.
pub fn hybrid_simulate(kernel: &KernelSpec, params: &SchemeParams, vol: &VolatilityModel) -> Result<FieldGrid> {
    vol.validate(kernel)?;
    let engine = HybridEngine::new(kernel, params, params.n)?;
    let sigma = vol.resolve(params)?;
    let out = engine.simulate(params.seed, params.replicate, sigma.as_ref())?;
    let values = match vol.constant_value() {
        Some(c) if c != 1.0 => out.data.iter().map(|v| c * v).collect(),
        _ => out.data,
    };
    FieldGrid::on_unit_square(params.n, values)
}
