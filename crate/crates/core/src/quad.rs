//! Adaptive Gauss-Kronrod quadrature in one and two dimensions.
//!
//! The 1D driver is a globally adaptive bisection scheme on the 7/15-point
//! Gauss-Kronrod pair. The error estimate of a panel is the plain difference
//! between the Kronrod and Gauss results, which is pessimistic for smooth
//! integrands but stays honest near endpoint singularities.
//!
//! The 2D driver applies the tensor product of the same pair to rectangles and
//! refines dyadically (split into four) where the estimated error is largest.
//! [`corner_singular`] removes an algebraic point singularity at a rectangle
//! corner with a Duffy split followed by a radial power substitution.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// The 15 Kronrod abscissae on [-1, 1] with Kronrod and Gauss weights
/// (the Gauss weight is zero at non-Gauss nodes).
fn kronrod_rule() -> &'static [(f64, f64, f64); 15] {
    static RULE: OnceLock<[(f64, f64, f64); 15]> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut rule = [(0.0, 0.0, 0.0); 15];
        for k in 0..7 {
            let wg = if k % 2 == 1 { WG[k / 2] } else { 0.0 };
            rule[k] = (-XGK[k], WGK[k], wg);
            rule[14 - k] = (XGK[k], WGK[k], wg);
        }
        rule[7] = (0.0, WGK[7], WG[3]);
        rule
    })
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut rk = 0.0;
    let mut rg = 0.0;
    for &(x, wk, wg) in kronrod_rule() {
        let v = f(center + half * x);
        rk += wk * v;
        rg += wg * v;
    }
    (rk * half, ((rk - rg) * half).abs())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Default cap on the number of panels of an adaptive 1D integration.
pub const DEFAULT_PANEL_BUDGET: usize = 4000;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    integrate_with_budget(f, a, b, tol, DEFAULT_PANEL_BUDGET)
}

/// Integrates `f` over consecutive pieces `[pts[0], pts[1]], [pts[1], pts[2]], ...`,
/// sharing the tolerance evenly.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, pts: &[f64], tol: f64) -> Result<QuadResult> {
    let pieces = pts.len().saturating_sub(1).max(1) as f64;
    let mut total = QuadResult {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in pts.windows(2) {
        let r = integrate(&f, w[0], w[1], tol / pieces)?;
        total.value += r.value;
        total.error += r.error;
        total.evaluations += r.evaluations;
    }
    Ok(total)
}

pub fn integrate_with_budget<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error) = gk15(&f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total_error = error;
    while total_error > tol {
        if heap.len() >= max_panels {
            return Err(Error::NonConvergence {
                estimate: total_error,
                tol,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point.
            return Err(Error::NonConvergence {
                estimate: total_error,
                tol,
                evaluations,
            });
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        total_error += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        // Re-sum occasionally so the running total does not drift.
        if heap.len() % 64 == 0 {
            total_error = heap.iter().map(|p| p.error).sum();
        }
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    Ok(QuadResult {
        value: panels.iter().map(|p| p.value).sum(),
        error: panels.iter().map(|p| p.error).sum(),
        evaluations,
    })
}

/// Integrates `f` over `[a, inf)` through the substitution `x = a + (1 - t) / t`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<QuadResult> {
    integrate(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let x = a + (1.0 - t) / t;
            let v = f(x) / (t * t);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// An axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    /// The unit cell centred at `(cx, cy)`.
    pub fn unit_cell(cx: f64, cy: f64) -> Self {
        Rect::new(cx - 0.5, cx + 0.5, cy - 0.5, cy + 0.5)
    }

    fn quarters(&self) -> [Rect; 4] {
        let xm = 0.5 * (self.x0 + self.x1);
        let ym = 0.5 * (self.y0 + self.y1);
        [
            Rect::new(self.x0, xm, self.y0, ym),
            Rect::new(xm, self.x1, self.y0, ym),
            Rect::new(self.x0, xm, ym, self.y1),
            Rect::new(xm, self.x1, ym, self.y1),
        ]
    }
}

fn gk15_rect<F: Fn(f64, f64) -> f64>(f: &F, r: &Rect) -> (f64, f64) {
    let rule = kronrod_rule();
    let cx = 0.5 * (r.x0 + r.x1);
    let hx = 0.5 * (r.x1 - r.x0);
    let cy = 0.5 * (r.y0 + r.y1);
    let hy = 0.5 * (r.y1 - r.y0);
    let mut rk = 0.0;
    let mut rg = 0.0;
    for &(xi, wki, wgi) in rule {
        let x = cx + hx * xi;
        let mut row_k = 0.0;
        let mut row_g = 0.0;
        for &(yj, wkj, wgj) in rule {
            let v = f(x, cy + hy * yj);
            row_k += wkj * v;
            row_g += wgj * v;
        }
        rk += wki * row_k;
        rg += wgi * row_g;
    }
    let area = hx * hy;
    (rk * area, ((rk - rg) * area).abs())
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    rect: Rect,
    value: f64,
    error: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Default cap on the number of rectangles of an adaptive 2D integration.
pub const DEFAULT_CELL_BUDGET: usize = 6000;

/// Integrates `f(x, y)` over a rectangle to absolute tolerance `tol`.
pub fn integrate_rect<F: Fn(f64, f64) -> f64>(f: F, rect: Rect, tol: f64) -> Result<QuadResult> {
    integrate_rect_with_budget(f, rect, tol, DEFAULT_CELL_BUDGET)
}

pub fn integrate_rect_with_budget<F: Fn(f64, f64) -> f64>(
    f: F,
    rect: Rect,
    tol: f64,
    max_cells: usize,
) -> Result<QuadResult> {
    let (value, error) = gk15_rect(&f, &rect);
    let mut evaluations = 225;
    let mut heap = BinaryHeap::new();
    heap.push(Cell { rect, value, error });
    let mut total_error = error;
    while total_error > tol {
        if heap.len() + 3 > max_cells {
            return Err(Error::NonConvergence {
                estimate: total_error,
                tol,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        total_error -= worst.error;
        for q in worst.rect.quarters() {
            let (v, e) = gk15_rect(&f, &q);
            total_error += e;
            heap.push(Cell {
                rect: q,
                value: v,
                error: e,
            });
        }
        evaluations += 4 * 225;
        if heap.len() % 256 == 0 {
            total_error = heap.iter().map(|c| c.error).sum();
        }
    }
    let mut cells = heap.into_vec();
    // Fixed summation order keeps results independent of heap internals.
    cells.sort_by(|p, q| {
        p.rect
            .x0
            .total_cmp(&q.rect.x0)
            .then(p.rect.y0.total_cmp(&q.rect.y0))
    });
    Ok(QuadResult {
        value: cells.iter().map(|c| c.value).sum(),
        error: cells.iter().map(|c| c.error).sum(),
        evaluations,
    })
}

/// Fixed tensor Gauss-Legendre rule on a rectangle.
pub fn gauss_rect<F: Fn(f64, f64) -> f64>(f: F, rect: Rect, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let cx = 0.5 * (rect.x0 + rect.x1);
    let hx = 0.5 * (rect.x1 - rect.x0);
    let cy = 0.5 * (rect.y0 + rect.y1);
    let hy = 0.5 * (rect.y1 - rect.y0);
    let mut sum = 0.0;
    for (xi, wi) in nodes.iter().zip(&weights) {
        let mut row = 0.0;
        for (yj, wj) in nodes.iter().zip(&weights) {
            row += wj * f(cx + hx * xi, cy + hy * yj);
        }
        sum += wi * row;
    }
    sum * hx * hy
}

/// Integrates `||s||^exponent * smooth(s)` over `[0, hx] x [0, hy]`, where the
/// power singularity sits at the origin corner (`exponent > -2`).
///
/// Each half of the rectangle (split along its diagonal) is written as
/// `s = u * (edge point)`, giving the weight `u^(exponent+1)` in the radial
/// coordinate. The radial integral uses geometric breakpoints `2^-k` so every
/// panel sees a smooth integrand; the edge parameter is integrated adaptively.
pub fn corner_singular<F: Fn(f64, f64) -> f64>(
    smooth: F,
    exponent: f64,
    hx: f64,
    hy: f64,
    tol: f64,
) -> Result<QuadResult> {
    if exponent <= -2.0 {
        return Err(crate::error::domain(
            "corner_singular",
            format!("exponent {exponent} must exceed -2"),
        ));
    }
    let p2 = exponent + 2.0;
    // Drop-in depth: the innermost panel carries mass of order 2^(-levels p2).
    let levels = ((60.0 / p2).ceil() as usize).clamp(8, 200);
    let mut pts: Vec<f64> = (0..=levels).rev().map(|k| 0.5f64.powi(k as i32)).collect();
    pts.insert(0, 0.0);
    let half_tol = 0.5 * tol;
    let inner_tol = half_tol / (hx * hy);
    let evals = std::cell::Cell::new(0usize);
    let failed = std::cell::Cell::new(false);
    let mut halves = [0.0; 2];
    let mut errors = [0.0; 2];
    for (h, out) in halves.iter_mut().enumerate() {
        let edge = |u: f64, v: f64| -> (f64, f64, f64) {
            if h == 0 {
                ((hx * hx + hy * hy * v * v).powf(0.5 * exponent), hx * u, hy * u * v)
            } else {
                ((hx * hx * v * v + hy * hy).powf(0.5 * exponent), hx * u * v, hy * u)
            }
        };
        let radial = |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let r = integrate(
                |v| {
                    let (w, x, y) = edge(u, v);
                    w * smooth(x, y)
                },
                0.0,
                1.0,
                inner_tol,
            );
            match r {
                Ok(r) => {
                    evals.set(evals.get() + r.evaluations);
                    hx * hy * u.powf(exponent + 1.0) * r.value
                }
                Err(_) => {
                    failed.set(true);
                    f64::NAN
                }
            }
        };
        let r = integrate_pieces(radial, &pts, half_tol)?;
        if failed.get() {
            return Err(Error::NonConvergence {
                estimate: f64::NAN,
                tol: inner_tol,
                evaluations: evals.get(),
            });
        }
        *out = r.value;
        errors[h] = r.error;
    }
    Ok(QuadResult {
        value: halves[0] + halves[1],
        error: errors[0] + errors[1],
        evaluations: evals.get(),
    })
}

fn circle_breaks(lo: f64, hi: f64, radius: f64, offsets: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    for &o in offsets {
        let d = radius * radius - o * o;
        if d > 0.0 {
            let c = d.sqrt();
            pts.extend([c, -c].into_iter().filter(|&c| c > lo && c < hi));
        }
    }
    if 0.0 > lo && 0.0 < hi {
        pts.push(0.0);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Iterated integral over `rect` of a function that is smooth except across
/// the circle `x^2 + y^2 = radius^2`; both directions break at the circle.
pub fn integrate_rect_circle_split<F: Fn(f64, f64) -> f64>(
    f: F,
    rect: Rect,
    radius: f64,
    tol: f64,
) -> Result<QuadResult> {
    let inner_tol = 0.5 * tol / (rect.x1 - rect.x0);
    let evals = std::cell::Cell::new(0usize);
    let failed = std::cell::Cell::new(false);
    let outer = |x: f64| {
        let pts = circle_breaks(rect.y0, rect.y1, radius, &[x]);
        match integrate_pieces(|y| f(x, y), &pts, inner_tol) {
            Ok(r) => {
                evals.set(evals.get() + r.evaluations);
                r.value
            }
            Err(_) => {
                failed.set(true);
                f64::NAN
            }
        }
    };
    let pts = circle_breaks(rect.x0, rect.x1, radius, &[rect.y0, rect.y1, 0.0]);
    let r = integrate_pieces(outer, &pts, 0.5 * tol)?;
    if failed.get() {
        return Err(Error::NonConvergence {
            estimate: f64::NAN,
            tol: inner_tol,
            evaluations: evals.get(),
        });
    }
    Ok(QuadResult {
        value: r.value,
        error: r.error,
        evaluations: evals.get(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x, -1.0, 2.0, 1e-13).unwrap();
        assert!((r.value - (64.0 / 6.0 - 1.0 / 6.0 - 4.5)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let r = integrate(|x| x.powf(-0.8), 0.0, 1.0, 1e-12).unwrap();
        assert!((r.value - 5.0).abs() < 1e-11, "{}", r.value);
    }

    #[test]
    fn semi_infinite_exponential() {
        let r = integrate_to_infinity(|x| (-2.0 * x).exp(), 0.5, 1e-13).unwrap();
        assert!((r.value - 0.5 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let err = integrate_with_budget(|x| x.powf(-0.999), 0.0, 1.0, 1e-14, 10).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn circle_split_integrates_disc_indicator() {
        let inside = |x: f64, y: f64| if x.hypot(y) < 1.0 { 1.0 } else { 0.0 };
        let r = integrate_rect_circle_split(inside, Rect::new(0.0, 1.0, 0.0, 1.0), 1.0, 1e-12).unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_4).abs() < 1e-11);
        let r = integrate_rect_circle_split(inside, Rect::new(-0.5, 0.5, 0.6, 1.2), 1.0, 1e-12).unwrap();
        let exact = 2.0 * integrate(|x: f64| ((1.0 - x * x).sqrt() - 0.6).max(0.0), 0.0, 0.5, 1e-14).unwrap().value;
        assert!((r.value - exact).abs() < 1e-11);
    }

    #[test]
    fn gauss_legendre_integrates_degree_2n_minus_1() {
        for order in 1..12 {
            let (x, w) = gauss_legendre(order);
            let deg = 2 * order - 1;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            // Even power deg-1 integrates to 2/deg.
            assert!((s - 2.0 / deg as f64).abs() < 1e-13, "order {order}");
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn rect_rule_on_smooth_function() {
        let r = integrate_rect(|x, y| (x * y).cos(), Rect::new(0.0, 1.0, 0.0, 2.0), 1e-13).unwrap();
        let exact = crate::quad::integrate(|x: f64| (2.0 * x).sin() / x, 0.0, 1.0, 1e-15)
            .unwrap()
            .value;
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn corner_singularity_matches_closed_form() {
        // int over [0,1/2]^2 of ||s||^-1 = ln(1 + sqrt 2) / 2 * 2... the full
        // unit cell gives 4 ln(1 + sqrt 2), one quadrant a quarter of that.
        let r = corner_singular(|_, _| 1.0, -1.0, 0.5, 0.5, 1e-13).unwrap();
        let exact = (1.0 + 2f64.sqrt()).ln();
        assert!((r.value - exact).abs() < 1e-12, "{} vs {exact}", r.value);
    }
}
