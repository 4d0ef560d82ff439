//! Reference computations for tests.
//!
//! Everything here is deliberately built on different numerical routes than
//! the `vmma` library: double-exponential (tanh-sinh) quadrature instead of
//! Gauss-Kronrod, nested 1D rules instead of tensor cubature, and plain
//! direct summation instead of FFTs. None of it is tuned for speed.

use std::f64::consts::PI;

/// Result of a tanh-sinh integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// The integrand is called with the abscissa `x`; abscissae are computed so
/// that points close to either endpoint keep full relative precision in
/// their distance to that endpoint, which makes endpoint singularities of
/// algebraic or logarithmic type harmless.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Estimate {
    let half = 0.5 * (b - a);
    let t_max = 6.5;
    let eval = |t: f64| -> f64 {
        let u = 0.5 * PI * t.sinh();
        // 1/cosh(u)^2 without overflow.
        let e = (-2.0 * u.abs()).exp();
        let w = 0.5 * PI * t.cosh() * 4.0 * e / (1.0 + e).powi(2);
        if !w.is_finite() || w == 0.0 {
            return 0.0;
        }
        let x = if u < 0.0 {
            a + (b - a) / (1.0 + (-2.0 * u).exp())
        } else {
            b - (b - a) / (1.0 + (2.0 * u).exp())
        };
        if x <= a || x >= b {
            return 0.0;
        }
        let v = f(x);
        half * w * v
    };

    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        if t > t_max {
            break;
        }
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    let mut error = f64::INFINITY;
    for level in 0..7 {
        h *= 0.5;
        let mut fresh = 0.0;
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > t_max {
                break;
            }
            fresh += eval(t) + eval(-t);
            k += 2;
        }
        sum += fresh;
        let next = sum * h;
        error = (next - estimate).abs();
        estimate = next;
        // Convergence is double exponential: once successive levels agree
        // to ~1e-7 the newest level is accurate to roughly the square.
        if error <= tol || (level >= 2 && error <= 1e-7 * estimate.abs()) {
            error = error * error / estimate.abs().max(f64::MIN_POSITIVE);
            break;
        }
    }
    Estimate {
        value: estimate,
        error,
    }
}

/// Tanh-sinh over several consecutive pieces `[pts[0], pts[1]], ...`.
pub fn tanh_sinh_pieces<F: Fn(f64) -> f64>(f: F, pts: &[f64], tol: f64) -> f64 {
    pts.windows(2)
        .map(|w| tanh_sinh(&f, w[0], w[1], tol).value)
        .sum()
}

/// Nested tanh-sinh over a rectangle, with the rectangle split at the given
/// interior break points in each direction (use them to place integrand
/// singularities on piece boundaries).
pub fn nested_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    xs: &[f64],
    ys: &[f64],
    tol: f64,
) -> f64 {
    tanh_sinh_pieces(
        |x| tanh_sinh_pieces(|y| f(x, y), ys, tol * 0.1),
        xs,
        tol,
    )
}

/// Break points `[lo, (singular point if inside), hi]`.
pub fn breaks(lo: f64, hi: f64, singular: f64) -> Vec<f64> {
    if singular > lo && singular < hi {
        vec![lo, singular, hi]
    } else {
        vec![lo, hi]
    }
}

/// Integral of `||x||^exponent` over the unit cell centred at `(j1, j2)`.
pub fn cell_power_integral(j1: f64, j2: f64, exponent: f64) -> f64 {
    if j1 == 0.0 && j2 == 0.0 {
        // Polar form over the eight octant triangles: the radial part is exact.
        let p = exponent + 2.0;
        let f = |t: f64| (0.5 / t.cos()).powf(p) / p;
        return 8.0 * tanh_sinh(f, 0.0, std::f64::consts::FRAC_PI_4, 1e-15).value;
    }
    let xs = breaks(j1 - 0.5, j1 + 0.5, 0.0);
    let ys = breaks(j2 - 0.5, j2 + 0.5, 0.0);
    nested_2d(
        |x, y| x.hypot(y).powf(exponent),
        &xs,
        &ys,
        1e-14,
    )
}

/// Integral over the unit cell centred at the origin of
/// `||a - s||^alpha * ||b - s||^alpha`.
pub fn cross_integral(a: (f64, f64), b: (f64, f64), alpha: f64) -> f64 {
    let mut xs = vec![-0.5, 0.5];
    let mut ys = vec![-0.5, 0.5];
    for p in [a, b] {
        if p.0 > -0.5 && p.0 < 0.5 && p.1 > -0.5 && p.1 < 0.5 {
            xs.push(p.0);
            ys.push(p.1);
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    nested_2d(
        |x, y| {
            let da = (a.0 - x).hypot(a.1 - y).powf(alpha);
            let db = (b.0 - x).hypot(b.1 - y).powf(alpha);
            da * db
        },
        &xs,
        &ys,
        1e-13,
    )
}

/// Modified Bessel function of the second kind through its integral
/// representation `int_0^inf exp(-x cosh t) cosh(nu t) dt`.
pub fn bessel_k_integral(nu: f64, x: f64) -> f64 {
    // Beyond t_max the integrand is below exp(-745) relative to its peak.
    let t_max = (800.0 / x).acosh() + 1.0;
    let f = |t: f64| (-x * t.cosh()).exp() * (nu * t).cosh();
    // Split so each piece sees a moderate dynamic range.
    let pts: Vec<f64> = (0..=16).map(|k| t_max * k as f64 / 16.0).collect();
    tanh_sinh_pieces(f, &pts, 1e-16)
}

/// Full linear 2D convolution by direct summation. Row-major inputs.
pub fn direct_convolution(
    a: &[f64],
    a_rows: usize,
    a_cols: usize,
    b: &[f64],
    b_rows: usize,
    b_cols: usize,
) -> Vec<f64> {
    let rows = a_rows + b_rows - 1;
    let cols = a_cols + b_cols - 1;
    let mut out = vec![0.0; rows * cols];
    for ar in 0..a_rows {
        for ac in 0..a_cols {
            let av = a[ar * a_cols + ac];
            for br in 0..b_rows {
                for bc in 0..b_cols {
                    out[(ar + br) * cols + ac + bc] += av * b[br * b_cols + bc];
                }
            }
        }
    }
    out
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Term-by-term partial sum of the Gauss hypergeometric series.
pub fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64, terms: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..terms {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
    }
    sum
}
