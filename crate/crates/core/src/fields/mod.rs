//! Simulation engines: hybrid scheme, Riemann-sum scheme and the exact
//! circulant-embedding baseline, plus volatility models and FFT convolution.
//!
//! Index conventions: a square array with half-width `h` stores the value
//! for the lattice point `k = (k1, k2)` at `data[(k2 + h) * side + (k1 + h)]`
//! with `side = 2h + 1`, the same layout as [`FieldGrid`].

mod circulant;
pub mod fft;
mod grid;
mod hybrid;
mod riemann;
pub mod rng;
mod volatility;

use serde::{Deserialize, Serialize};

pub use circulant::{circulant_simulate, CirculantEmbedding};
pub use fft::{conv2_fft, conv2_fft_valid, Square, ValidConvolver};
pub use grid::FieldGrid;
pub use hybrid::{hybrid_kernel_matrix, hybrid_simulate, sample_noise, HybridEngine, NoiseSample};
pub use riemann::{riemann_kernel_matrix, riemann_simulate, RiemannEngine};
pub use volatility::{exp_vmma_volatility, sigma_from_log_field};

use crate::covariance::{EvaluationPolicy, MAX_KAPPA};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

/// Discretization settings shared by the engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Grid resolution; the grid spacing is `1/n`.
    pub n: usize,
    /// Truncation exponent: the kernel is cut at `N = floor(n^(1 + gamma))` cells.
    pub gamma: f64,
    /// Half-width of the square of cells where the power kernel is kept exact.
    pub kappa: usize,
    pub seed: u64,
    /// Monte Carlo replicate index selecting independent random streams.
    pub replicate: u64,
    pub policy: EvaluationPolicy,
}

impl SchemeParams {
    pub fn new(n: usize, gamma: f64, kappa: usize, seed: u64) -> Result<Self> {
        let p = SchemeParams {
            n,
            gamma,
            kappa,
            seed,
            replicate: 0,
            policy: EvaluationPolicy::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_replicate(mut self, replicate: u64) -> Self {
        self.replicate = replicate;
        self
    }

    pub fn with_policy(mut self, policy: EvaluationPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation("n must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Validation(format!("gamma = {} must be positive", self.gamma)));
        }
        if self.kappa > MAX_KAPPA {
            return Err(Error::Validation(format!("kappa = {} exceeds {MAX_KAPPA}", self.kappa)));
        }
        if self.kappa > self.n {
            return Err(Error::Validation(format!("kappa = {} exceeds n = {}", self.kappa, self.n)));
        }
        Ok(())
    }

    /// `N = floor(n^(1 + gamma))`, at least `n`.
    pub fn truncation(&self) -> usize {
        let x = (self.n as f64).powf(1.0 + self.gamma);
        ((x * (1.0 + 1e-12)).floor() as usize).max(self.n)
    }

    /// Physical truncation half-width `(N + 1/2) / n`.
    pub fn c_n(&self) -> f64 {
        (self.truncation() as f64 + 0.5) / self.n as f64
    }

    /// Warning text when `gamma` is at or below the bound of the error asymptotics.
    pub fn gamma_warning(&self, kernel: &KernelSpec) -> Option<String> {
        let bound = kernel.min_truncation_gamma();
        (self.gamma <= bound).then(|| {
            format!(
                "gamma = {} does not exceed -(1 + alpha)/(1 + beta) = {bound:.6}; the error asymptotics do not apply",
                self.gamma
            )
        })
    }
}

/// Volatility field `sigma` multiplying the driving noise.
#[derive(Debug, Clone, PartialEq)]
pub enum VolatilityModel {
    /// `sigma = c > 0` everywhere.
    Constant(f64),
    /// `sigma^2 = exp(X')` with `X'` a hybrid-simulated field driven by an
    /// independent seed.
    ExpVmma { kernel: KernelSpec, seed: u64 },
    /// Values on the extended index set `{-N-n..N+n}^2` in the array layout of this module.
    Provided(Square),
}

impl VolatilityModel {
    /// Checks the model against the outer kernel.
    pub fn validate(&self, outer: &KernelSpec) -> Result<()> {
        match self {
            VolatilityModel::Constant(c) => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::Validation(format!("constant volatility {c} must be positive")));
                }
            }
            VolatilityModel::ExpVmma { kernel, .. } => {
                if !(kernel.alpha() > outer.alpha()) {
                    return Err(Error::Validation(format!(
                        "volatility roughness alpha' = {} must exceed alpha = {}",
                        kernel.alpha(),
                        outer.alpha()
                    )));
                }
            }
            VolatilityModel::Provided(s) => {
                if s.data.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::Validation("provided volatility must be positive and finite".into()));
                }
            }
        }
        Ok(())
    }

    /// `E[sigma^2]` when known in closed form.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            VolatilityModel::Constant(c) => Some(*c),
            _ => None,
        }
    }

    /// `sigma` on the extended index set of half-width `N + n`, or `None`
    /// for a constant (applied as a final scale factor).
    pub(crate) fn resolve(&self, params: &SchemeParams) -> Result<Option<Square>> {
        let half = params.truncation() + params.n;
        let side = 2 * half + 1;
        match self {
            VolatilityModel::Constant(_) => Ok(None),
            VolatilityModel::ExpVmma { kernel, seed } => {
                let mut inner = *params;
                inner.seed = *seed;
                Ok(Some(exp_vmma_volatility(kernel, &inner, half)?))
            }
            VolatilityModel::Provided(s) => {
                if s.side != side {
                    return Err(Error::Validation(format!(
                        "provided volatility has side {}, expected {side}",
                        s.side
                    )));
                }
                Ok(Some(s.clone()))
            }
        }
    }
}

/// Builds a square array of half-width `half` from a function of the lattice point.
pub(crate) fn lattice_square<F: FnMut(i64, i64) -> f64>(half: usize, mut f: F) -> Square {
    let h = half as i64;
    let side = 2 * half + 1;
    let mut data = Vec::with_capacity(side * side);
    for k2 in -h..=h {
        for k1 in -h..=h {
            data.push(f(k1, k2));
        }
    }
    Square { side, data }
}

/// Fills a square of half-width `half` with a function that is invariant
/// under the symmetries of the lattice, evaluating it once per octant
/// representative `0 <= b <= a`.
pub(crate) fn symmetric_square<F: Fn(i64, i64) -> Result<f64>>(half: usize, f: F) -> Result<Square> {
    let h = half as i64;
    let mut table = vec![0.0; (half + 1) * (half + 2) / 2];
    let at = |a: i64, b: i64| (a * (a + 1) / 2 + b) as usize;
    for a in 0..=h {
        for b in 0..=a {
            table[at(a, b)] = f(a, b)?;
        }
    }
    Ok(lattice_square(half, |k1, k2| {
        let (a, b) = (k1.abs(), k2.abs());
        let (a, b) = if a >= b { (a, b) } else { (b, a) };
        table[at(a, b)]
    }))
}
