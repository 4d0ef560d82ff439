//! Evaluation points of the step-function kernel and the central-cell weight.

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::closed_form::box_power_integral_any;
use crate::error::{domain, Error, Result};
use crate::kernels::KernelSpec;
use crate::quad;

/// Choice of evaluation points `b_j` for cells outside the central square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointMode {
    /// `b_j = j`.
    Midpoint,
    /// `||b_j|| = (int_cell ||x||^alpha dx)^(1/alpha)`.
    #[serde(rename = "optimal")]
    OptimalNorm,
}

/// Choice of the weight that replaces `L(||b_0|| / n)` in the central cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CentralMode {
    /// `L(||b_0|| / n)` with `||b_0||` the optimal norm of the central cell.
    OptimalNorm,
    /// The `L^2`-optimal coefficient from [`central_l_coefficient`].
    OptimalLCoefficient,
}

/// Evaluation-point policy of the hybrid and Riemann-sum schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvaluationPolicy {
    pub mode: PointMode,
    pub central_mode: CentralMode,
}

impl Default for EvaluationPolicy {
    fn default() -> Self {
        EvaluationPolicy {
            mode: PointMode::Midpoint,
            central_mode: CentralMode::OptimalLCoefficient,
        }
    }
}

impl EvaluationPolicy {
    pub fn midpoint() -> Self {
        Self::default()
    }

    pub fn optimal() -> Self {
        EvaluationPolicy {
            mode: PointMode::OptimalNorm,
            central_mode: CentralMode::OptimalLCoefficient,
        }
    }

    /// `||b_j||` for a cell outside the central square (`j != 0`).
    pub fn point_norm(&self, j: (i64, i64), alpha: f64) -> Result<f64> {
        match self.mode {
            PointMode::Midpoint => Ok((j.0 as f64).hypot(j.1 as f64)),
            PointMode::OptimalNorm => optimal_b_norm(j, alpha),
        }
    }
}

impl fmt::Display for PointMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointMode::Midpoint => "midpoint",
            PointMode::OptimalNorm => "optimal",
        })
    }
}

impl FromStr for PointMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(PointMode::Midpoint),
            "optimal" => Ok(PointMode::OptimalNorm),
            other => Err(Error::Parse(format!("unknown policy '{other}' (midpoint|optimal)"))),
        }
    }
}

/// `||b_j|| = (int_{cell j} ||x||^alpha dx)^(1/alpha)`, the evaluation norm
/// that makes `||x||^alpha - ||b_j||^alpha` orthogonal to constants on the cell.
pub fn optimal_b_norm(j: (i64, i64), alpha: f64) -> Result<f64> {
    if !(alpha > -1.0 && alpha < 0.0) {
        return Err(domain("optimal_b_norm", format!("alpha = {alpha} outside (-1, 0)")));
    }
    Ok(box_power_integral_any(j, alpha)?.powf(1.0 / alpha))
}

/// The central-cell weight
/// `int_cell ||s||^(2 alpha) L(||s|| / n) ds / int_cell ||s||^(2 alpha) ds`,
/// evaluated in polar form as
/// `8 / C00 * int_0^(1/sqrt 2) r^(2 alpha + 1) L(r / n) w(r) dr` with the
/// angular measure `w(r) = pi/4 - arccos(1 / (2 r)) 1{r > 1/2}` of the
/// octant inside the cell.
pub fn central_l_coefficient(kernel: &KernelSpec, n: usize, tol: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("central_l_coefficient", "n must be positive"));
    }
    let alpha = kernel.alpha();
    let nf = n as f64;
    let c00 = box_power_integral_any((0, 0), 2.0 * alpha)?;
    let p = 2.0 * alpha + 2.0;
    let piece_tol = tol * c00 / 16.0;
    let l = |r: f64| kernel.eval_l(r / nf).unwrap_or(f64::NAN);
    // r = u^(1/p) absorbs r^(2 alpha + 1) on (0, 1/2].
    let inner = quad::integrate(
        |u| FRAC_PI_4 * l(u.powf(1.0 / p).min(0.5)) / p,
        0.0,
        0.5f64.powf(p),
        piece_tol,
    )?;
    let outer = quad::integrate(
        |r| {
            let w = (FRAC_PI_4 - (0.5 / r).min(1.0).acos()).max(0.0);
            r.powf(2.0 * alpha + 1.0) * l(r) * w
        },
        0.5,
        1.0 / SQRT_2,
        piece_tol,
    )?;
    let value = 8.0 * (inner.value + outer.value) / c00;
    if !value.is_finite() {
        return Err(domain("central_l_coefficient", "kernel evaluation failed"));
    }
    Ok(value)
}

/// Index of cell `j` in the row-major ordering of `{-kappa..kappa}^2`
/// (first coordinate slow, second fast).
pub fn cell_index(j: (i64, i64), kappa: usize) -> usize {
    let k = kappa as i64;
    let side = 2 * k + 1;
    ((j.0 + k) * side + (j.1 + k)) as usize
}

/// Cells of `{-kappa..kappa}^2` in block order.
pub fn central_cells(kappa: usize) -> Vec<(i64, i64)> {
    let k = kappa as i64;
    let mut cells = Vec::with_capacity((2 * kappa + 1).pow(2));
    for a in -k..=k {
        for b in -k..=k {
            cells.push((a, b));
        }
    }
    cells
}

/// Weights of the power-kernel cells in block order: `L(||j|| / n)` for
/// `j != 0` and the central weight selected by the policy for `j = 0`.
pub fn power_cell_weights(
    kernel: &KernelSpec,
    kappa: usize,
    n: usize,
    policy: &EvaluationPolicy,
    tol: f64,
) -> Result<Vec<f64>> {
    let nf = n as f64;
    let central = match policy.central_mode {
        CentralMode::OptimalLCoefficient => central_l_coefficient(kernel, n, tol)?,
        CentralMode::OptimalNorm => kernel.eval_l(optimal_b_norm((0, 0), kernel.alpha())? / nf)?,
    };
    central_cells(kappa)
        .into_iter()
        .map(|j| {
            if j == (0, 0) {
                Ok(central)
            } else {
                kernel.eval_l((j.0 as f64).hypot(j.1 as f64) / nf)
            }
        })
        .collect()
}
