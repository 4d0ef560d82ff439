//! Empirical variogram and the square-increment fractal-dimension estimator.

use crate::error::{Error, Result};
use crate::fields::FieldGrid;

/// Mean of `(X_{s + l e} - X_s)^2` over all positions and both axis
/// directions `e`, for `l = 1..=max_lag`; returns `(l * spacing, value)`.
pub fn empirical_variogram(grid: &FieldGrid, max_lag: usize) -> Result<Vec<(f64, f64)>> {
    let side = grid.side();
    if max_lag == 0 || 2 * max_lag >= side {
        return Err(Error::Validation(format!(
            "max lag {max_lag} must be positive and below side/2 = {}",
            side / 2
        )));
    }
    let v = grid.values();
    let mut out = Vec::with_capacity(max_lag);
    for lag in 1..=max_lag {
        let mut sum = 0.0;
        for row in 0..side {
            for col in 0..side - lag {
                let d = v[row * side + col + lag] - v[row * side + col];
                sum += d * d;
            }
        }
        for row in 0..side - lag {
            for col in 0..side {
                let d = v[(row + lag) * side + col] - v[row * side + col];
                sum += d * d;
            }
        }
        let count = 2 * side * (side - lag);
        out.push((lag as f64 * grid.spacing(), sum / count as f64));
    }
    Ok(out)
}

/// Mean squared second-order increment
/// `X_{i+l,j+l} - X_{i+l,j} - X_{i,j+l} + X_{i,j}` at lag `l`.
fn square_increment_mean(grid: &FieldGrid, lag: usize) -> f64 {
    let side = grid.side();
    let v = grid.values();
    let mut sum = 0.0;
    for row in 0..side - lag {
        for col in 0..side - lag {
            let z = v[(row + lag) * side + col + lag] - v[(row + lag) * side + col] - v[row * side + col + lag]
                + v[row * side + col];
            sum += z * z;
        }
    }
    sum / ((side - lag) * (side - lag)) as f64
}

/// Two-scale square-increment estimate `3 - log2(V(2) / V(1)) / 2` of the
/// graph dimension, clamped to `[2, 3]`.
pub fn square_increment_dim(grid: &FieldGrid) -> Result<f64> {
    if grid.side() < 8 {
        return Err(Error::Validation(format!("grid side {} is below 8", grid.side())));
    }
    let scale = grid.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let v1 = square_increment_mean(grid, 1);
    let v2 = square_increment_mean(grid, 2);
    // Affine surfaces leave only rounding noise in the increments.
    if !(v1 > (1e-12 * scale).powi(2)) || scale == 0.0 {
        return Err(Error::DegenerateInput("square increments vanish (affine or constant surface)".into()));
    }
    Ok((3.0 - 0.5 * (v2 / v1).log2()).clamp(2.0, 3.0))
}
