//! Cross integrals `int_cell ||j1 - s||^alpha ||j2 - s||^alpha ds` over the
//! unit cell centred at the origin.

use crate::error::{domain, Result};
use crate::quad::{self, Rect};

/// Default absolute tolerance for cross integrals at `n = 1`.
pub const DEFAULT_CROSS_TOL: f64 = 1e-13;

/// `int_{[-1/2,1/2]^2} ||j1 - s||^alpha ||j2 - s||^alpha ds` to absolute tolerance `tol`.
///
/// When neither cell is the origin the integrand is smooth on the cell and a
/// plain adaptive tensor rule is used. When one of them is the origin the
/// cell is split into four quadrants meeting at the singular point and each
/// quadrant is integrated with the corner-singular rule.
pub fn cross_covariance_integral(j1: (i64, i64), j2: (i64, i64), alpha: f64, tol: f64) -> Result<f64> {
    if !(alpha > -1.0 && alpha <= 0.0) {
        return Err(domain("cross_covariance_integral", format!("alpha = {alpha} outside (-1, 0]")));
    }
    if !(tol > 0.0) {
        return Err(domain("cross_covariance_integral", format!("tolerance {tol} must be positive")));
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    if j1 == j2 {
        // The diagonal entry is a box integral with doubled exponent; this
        // branch serves cross-checks only.
        return super::closed_form::box_power_integral_any(j1, 2.0 * alpha);
    }
    let (p, q) = ((j1.0 as f64, j1.1 as f64), (j2.0 as f64, j2.1 as f64));
    let singular = if j1 == (0, 0) {
        Some(q)
    } else if j2 == (0, 0) {
        Some(p)
    } else {
        None
    };
    match singular {
        None => {
            let f = |x: f64, y: f64| {
                ((p.0 - x).hypot(p.1 - y) * (q.0 - x).hypot(q.1 - y)).powf(alpha)
            };
            Ok(quad::integrate_rect(f, Rect::new(-0.5, 0.5, -0.5, 0.5), tol)?.value)
        }
        Some(other) => {
            let mut total = 0.0;
            for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
                let smooth = |x: f64, y: f64| (other.0 - sx * x).hypot(other.1 - sy * y).powf(alpha);
                total += quad::corner_singular(smooth, alpha, 0.5, 0.5, 0.25 * tol)?.value;
            }
            Ok(total)
        }
    }
}
