//! Exact mean-square error of the hybrid scheme under constant volatility.
//!
//! With `sigma` constant the error at a grid point is a Wiener integral of
//! the kernel difference, so `E_n = E[sigma^2] (D1 + D2 + D3 + D4)` with
//! - `D1`: central cells, `int (||s||^alpha L_j - g(s))^2`;
//! - `D2`: step cells in `{-n..n}^2`, `int (g(s) - g(b_j / n))^2`;
//! - `D3`: step cells of the remaining truncation window;
//! - `D4`: `int g^2` outside the truncation square.

use std::f64::consts::FRAC_PI_4;
use std::io::Write;

use rayon::prelude::*;

use crate::covariance::{
    central_l_coefficient, optimal_b_norm, CentralMode, JTable, PointMode, DEFAULT_TRUNCATION,
};
use crate::error::{Error, Result};
use crate::fields::SchemeParams;
use crate::kernels::{KernelSpec, KernelVariant};
use crate::quad::{self, Rect};

/// Step cells with sup-norm up to this radius are integrated adaptively.
const NEAR_RADIUS: i64 = 12;
/// Gauss order for step cells inside `{-n..n}^2` beyond the near radius.
const MID_ORDER: usize = 4;
/// Gauss order for the cells of the outer annulus.
const FAR_ORDER: usize = 2;

/// Error decomposition for one resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseEntry {
    pub n: usize,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    /// `E[sigma^2] (D1 + D2 + D3 + D4)`.
    pub e_n: f64,
    /// `n^(2 (alpha + 1)) L(1/n)^-2 E_n`.
    pub scaled: f64,
}

/// Decompositions over a list of resolutions with the limiting constant and fitted rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MseReport {
    pub kernel: KernelSpec,
    pub kappa: usize,
    pub gamma: f64,
    pub mode: PointMode,
    pub entries: Vec<MseEntry>,
    /// `E[sigma^2] J(alpha, kappa, b)`.
    pub j_ref: f64,
    /// Least-squares slope and intercept of `ln E_n` on `ln n` (`None` for fewer than 3 resolutions).
    pub rate: Option<(f64, f64)>,
    pub warning: Option<String>,
}

impl MseReport {
    /// CSV with header `n,D1,D2,D3,D4,E_n,scaled,J_ref`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,D1,D2,D3,D4,E_n,scaled,J_ref")?;
        for e in &self.entries {
            writeln!(
                out,
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                e.n, e.d1, e.d2, e.d3, e.d4, e.e_n, e.scaled, self.j_ref
            )?;
        }
        Ok(())
    }
}

/// Octant representatives `(a, b)`, `0 <= b <= a`, with their multiplicity in the full lattice.
fn octant_reps(lo_exclusive: i64, hi: i64) -> Vec<(i64, i64, f64)> {
    let mut reps = Vec::new();
    for a in (lo_exclusive + 1).max(0)..=hi {
        for b in 0..=a {
            let mult = match (a, b) {
                (0, 0) => 1.0,
                (_, 0) => 4.0,
                _ if a == b => 4.0,
                _ => 8.0,
            };
            reps.push((a, b, mult));
        }
    }
    reps
}

fn cell_rect(a: i64, b: i64, n: f64) -> Rect {
    let h = 0.5 / n;
    Rect::new(a as f64 / n - h, a as f64 / n + h, b as f64 / n - h, b as f64 / n + h)
}

/// Radius beyond which the kernel vanishes identically.
fn support_radius(kernel: &KernelSpec) -> Option<f64> {
    match kernel.variant() {
        KernelVariant::PurePower { radius } => Some(radius),
        _ => None,
    }
}

fn crosses_circle(rect: &Rect, radius: f64) -> bool {
    let near = |lo: f64, hi: f64| if lo > 0.0 { lo } else if hi < 0.0 { -hi } else { 0.0 };
    let far = |lo: f64, hi: f64| lo.abs().max(hi.abs());
    let dmin = near(rect.x0, rect.x1).hypot(near(rect.y0, rect.y1));
    let dmax = far(rect.x0, rect.x1).hypot(far(rect.y0, rect.y1));
    dmin < radius && radius < dmax
}

/// `sum over octant reps with lo < sup-norm <= hi` of `int_cell (g(s) - g(b_j/n))^2`.
fn step_error(
    kernel: &KernelSpec,
    n: usize,
    mode: PointMode,
    lo: i64,
    hi: i64,
    far_order: usize,
    cell_tol: f64,
) -> Result<f64> {
    let nf = n as f64;
    let alpha = kernel.alpha();
    let g = |x: f64, y: f64| kernel.eval_g(x.hypot(y)).unwrap_or(f64::NAN);
    let reps = octant_reps(lo, hi);
    let support = support_radius(kernel);
    let values: Vec<Result<f64>> = reps
        .par_iter()
        .map(|&(a, b, mult)| {
            let norm = match mode {
                PointMode::Midpoint => (a as f64).hypot(b as f64),
                PointMode::OptimalNorm => optimal_b_norm((a, b), alpha)?,
            };
            let gb = kernel.eval_g(norm / nf)?;
            let f = |x: f64, y: f64| {
                let d = g(x, y) - gb;
                d * d
            };
            let rect = cell_rect(a, b, nf);
            let v = if let Some(r) = support.filter(|&r| crosses_circle(&rect, r)) {
                quad::integrate_rect_circle_split(f, rect, r, cell_tol)?.value
            } else if a <= NEAR_RADIUS {
                quad::integrate_rect(f, rect, cell_tol)?.value
            } else if a <= n as i64 {
                quad::gauss_rect(f, rect, MID_ORDER)
            } else {
                quad::gauss_rect(f, rect, far_order)
            };
            Ok(mult * v)
        })
        .collect();
    let mut total = 0.0;
    for v in values.into_iter().rev() {
        total += v?;
    }
    if !total.is_finite() {
        return Err(Error::Domain {
            op: "hybrid_mse",
            detail: "kernel evaluation failed in a step cell".into(),
        });
    }
    Ok(total)
}

/// `D1`: central cells with the exact power kernel and frozen `L`.
fn central_error(kernel: &KernelSpec, params: &SchemeParams, tol: f64) -> Result<f64> {
    let n = params.n as f64;
    let alpha = kernel.alpha();
    let l = |r: f64| kernel.eval_l(r).unwrap_or(f64::NAN);
    let central = match params.policy.central_mode {
        CentralMode::OptimalLCoefficient => central_l_coefficient(kernel, params.n, tol)?,
        CentralMode::OptimalNorm => kernel.eval_l(optimal_b_norm((0, 0), alpha)? / n)?,
    };
    let cells = (2 * params.kappa + 1).pow(2) as f64;
    let cell_tol = tol / cells;
    let h = 0.5 / n;
    let quadrant = quad::corner_singular(
        |x, y| {
            let d = central - l(x.hypot(y));
            d * d
        },
        2.0 * alpha,
        h,
        h,
        cell_tol / 4.0,
    )?;
    let mut total = 4.0 * quadrant.value;
    for (a, b, mult) in octant_reps(0, params.kappa as i64) {
        if a == 0 {
            continue;
        }
        let lj = kernel.eval_l((a as f64).hypot(b as f64) / n)?;
        let f = |x: f64, y: f64| {
            let r = x.hypot(y);
            let d = r.powf(alpha) * (lj - l(r));
            d * d
        };
        let rect = cell_rect(a, b, n);
        total += mult
            * match support_radius(kernel).filter(|&r| crosses_circle(&rect, r)) {
                Some(r) => quad::integrate_rect_circle_split(f, rect, r, cell_tol)?.value,
                None => quad::integrate_rect(f, rect, cell_tol)?.value,
            };
    }
    Ok(total)
}

/// `int g^2` over the complement of `[-c, c]^2`, as
/// `8 int_0^(pi/4) G(c / cos theta) d theta` with `G(rho) = int_rho^inf g(r)^2 r dr`.
pub fn tail_g_squared(kernel: &KernelSpec, c: f64, tol: f64) -> Result<f64> {
    let alpha = kernel.alpha();
    let p = 2.0 * alpha + 2.0;
    match kernel.variant() {
        KernelVariant::PurePower { radius } => {
            let big_g = |rho: f64| {
                if rho >= radius {
                    0.0
                } else {
                    (radius.powf(p) - rho.powf(p)) / p
                }
            };
            // G has a kink where the ray leaves the support.
            let mut pts = vec![0.0];
            if radius > c && radius < c * std::f64::consts::SQRT_2 {
                pts.push((c / radius).acos());
            }
            pts.push(FRAC_PI_4);
            Ok(8.0 * quad::integrate_pieces(|t| big_g(c / t.cos()), &pts, tol / 8.0)?.value)
        }
        _ => {
            let inner_tol = tol / 16.0;
            let big_g = |rho: f64| {
                quad::integrate_to_infinity(
                    |r| kernel.eval_g(r).map(|g| g * g * r).unwrap_or(f64::NAN),
                    rho,
                    inner_tol,
                )
                .map(|q| q.value)
                .unwrap_or(f64::NAN)
            };
            let v = 8.0 * quad::integrate(|t| big_g(c / t.cos()), 0.0, FRAC_PI_4, tol / 8.0)?.value;
            if !v.is_finite() {
                return Err(Error::NonConvergence {
                    estimate: f64::NAN,
                    tol,
                    evaluations: 0,
                });
            }
            Ok(v)
        }
    }
}

/// Error decomposition at resolution `params.n` with `E[sigma^2] = sigma2`.
///
/// `tol` is the absolute tolerance for `D1`, `D4` and the adaptive step
/// cells near the origin (shared over those cells).
pub fn hybrid_mse(kernel: &KernelSpec, params: &SchemeParams, tol: f64, sigma2: f64) -> Result<MseEntry> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tolerance {tol} must be positive")));
    }
    let n = params.n;
    let nf = n as f64;
    let kappa = params.kappa as i64;
    let truncation = params.truncation() as i64;
    let near_cells = ((2 * NEAR_RADIUS + 1).pow(2)) as f64;
    let cell_tol = tol / near_cells;
    let mode = params.policy.mode;
    let d1 = central_error(kernel, params, tol)?;
    let d2 = step_error(kernel, n, mode, kappa, n as i64, MID_ORDER, cell_tol)?;
    let d3 = step_error(kernel, n, mode, n as i64, truncation, FAR_ORDER, cell_tol)?;
    let d4 = tail_g_squared(kernel, params.c_n(), tol)?;
    let e_n = sigma2 * (d1 + d2 + d3 + d4);
    let alpha = kernel.alpha();
    let l = kernel.eval_l(1.0 / nf)?;
    let scaled = nf.powf(2.0 * (alpha + 1.0)) * e_n / (l * l);
    Ok(MseEntry {
        n,
        d1,
        d2,
        d3,
        d4,
        e_n,
        scaled,
    })
}

/// Ordinary least squares of `ln(errors)` on `ln(ns)`; returns `(slope, intercept)`.
pub fn rate_fit(ns: &[usize], errors: &[f64]) -> Result<(f64, f64)> {
    if ns.len() != errors.len() || ns.len() < 3 {
        return Err(Error::Validation(format!(
            "rate fit needs equally long lists of at least 3 entries (got {} and {})",
            ns.len(),
            errors.len()
        )));
    }
    if ns.iter().any(|&n| n == 0) || errors.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Validation("rate fit needs positive resolutions and errors".into()));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("all resolutions are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Runs [`hybrid_mse`] for each resolution and attaches the limiting constant and the fitted rate.
pub fn mse_study(kernel: &KernelSpec, ns: &[usize], base: &SchemeParams, tol: f64, sigma2: f64) -> Result<MseReport> {
    let mut entries = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut p = *base;
        p.n = n;
        entries.push(hybrid_mse(kernel, &p, tol, sigma2)?);
    }
    let truncation = DEFAULT_TRUNCATION.max(10 * base.kappa + 10);
    let j = JTable::new(kernel.alpha(), base.policy.mode, truncation)?.j(base.kappa)?;
    let rate = if ns.len() >= 3 {
        let errors: Vec<f64> = entries.iter().map(|e| e.e_n).collect();
        Some(rate_fit(ns, &errors)?)
    } else {
        None
    };
    Ok(MseReport {
        kernel: *kernel,
        kappa: base.kappa,
        gamma: base.gamma,
        mode: base.policy.mode,
        entries,
        j_ref: sigma2 * j,
        rate,
        warning: base.gamma_warning(kernel),
    })
}
