//! Closed forms for integrals of `||x||^e` over triangles and unit cells.

use std::f64::consts::SQRT_2;

use crate::error::{domain, Result};
use crate::specfun::hyp2f1_half;

fn check_exponent(op: &'static str, exponent: f64) -> Result<()> {
    if exponent > -2.0 && exponent <= 0.0 {
        Ok(())
    } else {
        Err(domain(op, format!("exponent {exponent} outside (-2, 0]")))
    }
}

/// Integral of `||x||^exponent` over the right triangle with vertices
/// `(j2, j2)`, `(j1, j2)`, `(j1, j1)` (legs on `x2 = j2` and `x1 = j1`,
/// hypotenuse on the diagonal), for `0 <= j2 < j1`.
///
/// With `a = exponent / 2` and `F(z) = 2F1(1/2, 3/2 + a; 3/2; z)` the value is
/// `(j1^(e+2) + j2^(e+2)) F(1/2) / (2^(3/2) (a+1))
///  - j1 j2^(e+2) F(j1^2/|j|^2) / (2 |j| (a+1))
///  - j1^(e+2) j2 F(j2^2/|j|^2) / (2 |j| (a+1))`,
/// where the middle term is absent for `j2 = 0`.
pub fn triangle_integral(j1: f64, j2: f64, exponent: f64) -> Result<f64> {
    check_exponent("triangle_integral", exponent)?;
    if !(j2 >= 0.0 && j2 < j1) {
        return Err(domain(
            "triangle_integral",
            format!("need 0 <= j2 < j1, got j1 = {j1}, j2 = {j2}"),
        ));
    }
    let a = 0.5 * exponent;
    let b = 1.5 + a;
    let ep2 = exponent + 2.0;
    let f_half = hyp2f1_half(b, 0.5)?;
    let j1p = j1.powf(ep2);
    if j2 == 0.0 {
        return Ok(j1p * f_half / (2.0 * SQRT_2 * (a + 1.0)));
    }
    let norm = j1.hypot(j2);
    let j2p = j2.powf(ep2);
    let z1 = (j1 / norm).powi(2);
    let z2 = (j2 / norm).powi(2);
    let first = (j1p + j2p) * f_half / (2.0 * SQRT_2 * (a + 1.0));
    let second = j1 * j2p * hyp2f1_half(b, z1)? / (2.0 * norm * (a + 1.0));
    let third = j1p * j2 * hyp2f1_half(b, z2)? / (2.0 * norm * (a + 1.0));
    Ok(first - second - third)
}

/// Triangle integral that is zero for a degenerate triangle (`j1 == j2`).
fn tri(j1: f64, j2: f64, exponent: f64) -> Result<f64> {
    if j1 == j2 {
        Ok(0.0)
    } else {
        triangle_integral(j1, j2, exponent)
    }
}

/// Integral of `||x||^exponent` over the unit cell centred at `(j1, j2)`,
/// for `0 <= j2 <= j1`, assembled from triangle integrals.
pub fn box_power_integral(j: (i64, i64), exponent: f64) -> Result<f64> {
    check_exponent("box_power_integral", exponent)?;
    let (j1, j2) = j;
    if !(0 <= j2 && j2 <= j1) {
        return Err(domain(
            "box_power_integral",
            format!("cell ({j1}, {j2}) outside the octant 0 <= j2 <= j1"),
        ));
    }
    let (a, b) = (j1 as f64, j2 as f64);
    if j1 == 0 {
        return Ok(8.0 * tri(0.5, 0.0, exponent)?);
    }
    if j1 == j2 {
        return Ok(2.0 * tri(a + 0.5, a - 0.5, exponent)?);
    }
    if j2 == 0 {
        return Ok(2.0
            * (tri(a + 0.5, 0.0, exponent)? - tri(a - 0.5, 0.0, exponent)?
                - tri(a + 0.5, 0.5, exponent)?
                + tri(a - 0.5, 0.5, exponent)?));
    }
    Ok(tri(a + 0.5, b - 0.5, exponent)? - tri(a - 0.5, b - 0.5, exponent)?
        - tri(a + 0.5, b + 0.5, exponent)?
        + tri(a - 0.5, b + 0.5, exponent)?)
}

/// Maps any integer cell to its representative in the octant `0 <= j2 <= j1`.
pub fn octant(j: (i64, i64)) -> (i64, i64) {
    let (a, b) = (j.0.abs(), j.1.abs());
    if a >= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// [`box_power_integral`] for any cell, reduced to the octant by symmetry.
pub fn box_power_integral_any(j: (i64, i64), exponent: f64) -> Result<f64> {
    box_power_integral(octant(j), exponent)
}
