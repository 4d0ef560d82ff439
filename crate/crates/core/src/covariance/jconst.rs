//! The limiting mean-square error constant
//! `J(alpha, kappa, b) = sum_{j outside {-kappa..kappa}^2} int_{cell j} (||x||^alpha - ||b_j||^alpha)^2 dx`.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;

use super::closed_form::box_power_integral;
use super::policy::PointMode;
use crate::error::{Error, Result};
use crate::quad::{self, Rect};

/// Cells with sup-norm up to this radius are integrated adaptively; beyond
/// it a fixed Gauss-Legendre rule is used.
const NEAR_RADIUS: i64 = 8;
const FAR_ORDER: usize = 10;
const NEAR_TOL: f64 = 1e-15;

/// Default truncation radius of the explicit cell sum.
pub const DEFAULT_TRUNCATION: usize = 64;

/// Per-cell contributions for one `(alpha, mode, truncation)`, reusable across `kappa`.
#[derive(Debug, Clone)]
pub struct JTable {
    alpha: f64,
    mode: PointMode,
    truncation: usize,
    /// `(sup-norm, multiplicity * cell value)` for each octant representative.
    cells: Vec<(i64, f64)>,
    tail: f64,
}

fn cell_value(j: (i64, i64), alpha: f64, mode: PointMode) -> Result<f64> {
    let c = match mode {
        PointMode::Midpoint => ((j.0 as f64).hypot(j.1 as f64)).powf(alpha),
        PointMode::OptimalNorm => box_power_integral(j, alpha)?,
    };
    let f = |x: f64, y: f64| {
        let d = x.hypot(y).powf(alpha) - c;
        d * d
    };
    let rect = Rect::unit_cell(j.0 as f64, j.1 as f64);
    if j.0.max(j.1) <= NEAR_RADIUS {
        Ok(quad::integrate_rect(f, rect, NEAR_TOL)?.value)
    } else {
        Ok(quad::gauss_rect(f, rect, FAR_ORDER))
    }
}

/// Fourth-order coefficient of the per-cell error at unit radius in
/// direction `theta`, including the lattice-sum correction.
fn quartic_coefficient(alpha: f64, theta: f64, mode: PointMode) -> f64 {
    let a = alpha;
    let d1 = a;
    let d2 = a * (a - 1.0);
    let d3 = a * (a - 1.0) * (a - 2.0);
    let (u1, u2) = (theta.cos(), theta.sin());
    let u = [u1, u2];
    let g = [d1 * u1, d1 * u2];
    let mut h = [[0.0; 2]; 2];
    for (i, row) in h.iter_mut().enumerate() {
        for (k, entry) in row.iter_mut().enumerate() {
            let delta = if i == k { 1.0 } else { 0.0 };
            *entry = (d2 - d1) * u[i] * u[k] + d1 * delta;
        }
    }
    let b = d2 - d1;
    let big_a = d3 - 3.0 * b;
    let t = |i: usize, k: usize, l: usize| {
        let delta = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
        big_a * u[i] * u[k] * u[l] + b * (delta(i, k) * u[l] + delta(i, l) * u[k] + delta(k, l) * u[i])
    };
    let quad_sq = 0.25
        * ((h[0][0].powi(2) + h[1][1].powi(2)) / 80.0
            + 2.0 * h[0][0] * h[1][1] / 144.0
            + 4.0 * h[0][1].powi(2) / 144.0);
    let grad_cubic = g[0] * (t(0, 0, 0) / 80.0 + 3.0 * t(0, 1, 1) / 144.0)
        + g[1] * (t(1, 1, 1) / 80.0 + 3.0 * t(0, 0, 1) / 144.0);
    let mut e4 = quad_sq + grad_cubic / 3.0;
    if mode == PointMode::OptimalNorm {
        let tr = h[0][0] + h[1][1];
        e4 -= (tr / 24.0).powi(2);
    }
    // Sum over cell centres versus integral over cells.
    e4 - a * a * (2.0 * a - 2.0).powi(2) / 288.0
}

/// Asymptotic sum of all cell contributions outside `{-T..T}^2`.
fn tail_estimate(alpha: f64, truncation: usize, mode: PointMode) -> Result<f64> {
    let edge = truncation as f64 + 0.5;
    let lead = alpha * alpha / 12.0;
    let integrand = |theta: f64| {
        let rho = edge / theta.cos();
        lead * rho.powf(2.0 * alpha) / (-2.0 * alpha)
            + quartic_coefficient(alpha, theta, mode) * rho.powf(2.0 * alpha - 2.0) / (2.0 - 2.0 * alpha)
    };
    Ok(8.0 * quad::integrate(integrand, 0.0, FRAC_PI_4, 1e-16)?.value)
}

impl JTable {
    pub fn new(alpha: f64, mode: PointMode, truncation: usize) -> Result<Self> {
        if !(alpha > -1.0 && alpha < 0.0) {
            return Err(Error::Validation(format!("alpha = {alpha} outside (-1, 0)")));
        }
        let t = truncation as i64;
        let reps: Vec<(i64, i64)> = (1..=t).flat_map(|a| (0..=a).map(move |b| (a, b))).collect();
        let values: Vec<Result<(i64, f64)>> = reps
            .par_iter()
            .map(|&(a, b)| {
                let mult = if b == 0 || b == a { 4.0 } else { 8.0 };
                Ok((a, mult * cell_value((a, b), alpha, mode)?))
            })
            .collect();
        let cells = values.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(JTable {
            alpha,
            mode,
            truncation,
            cells,
            tail: tail_estimate(alpha, truncation, mode)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mode(&self) -> PointMode {
        self.mode
    }

    /// Estimated contribution of the cells beyond the truncation radius.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// `J(alpha, kappa, b)`; requires `truncation >= 10 kappa + 10`.
    pub fn j(&self, kappa: usize) -> Result<f64> {
        if self.truncation < 10 * kappa + 10 {
            return Err(Error::Validation(format!(
                "truncation {} is below 10 kappa + 10 = {}",
                self.truncation,
                10 * kappa + 10
            )));
        }
        let k = kappa as i64;
        // Summed from the far cells inwards so small terms are added first.
        let partial: f64 = self
            .cells
            .iter()
            .rev()
            .filter(|(sup, _)| *sup > k)
            .map(|(_, v)| *v)
            .fold(0.0, |acc, v| acc + v);
        Ok(self.tail + partial)
    }
}

/// `J(alpha, kappa, b)` for the given point mode, summing cells with
/// sup-norm up to `truncation` and estimating the rest asymptotically.
pub fn j_constant(alpha: f64, kappa: usize, mode: PointMode, truncation: usize) -> Result<f64> {
    JTable::new(alpha, mode, truncation)?.j(kappa)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_expansion_matches_far_cell() {
        // Integrate the exact cell error far out and compare with the expansion.
        let alpha = -0.4;
        let j = (40i64, 17i64);
        let exact = cell_value(j, alpha, PointMode::Midpoint).unwrap();
        let r = (j.0 as f64).hypot(j.1 as f64);
        let theta = (j.1 as f64).atan2(j.0 as f64);
        let e4 = quartic_coefficient(alpha, theta, PointMode::Midpoint) + alpha * alpha * (2.0 * alpha - 2.0).powi(2) / 288.0;
        let approx = alpha * alpha / 12.0 * r.powf(2.0 * alpha - 2.0) + e4 * r.powf(2.0 * alpha - 4.0);
        assert!((approx / exact - 1.0).abs() < 1e-6, "{approx} vs {exact}");
    }
}
