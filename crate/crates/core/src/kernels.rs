//! Isotropic moving-average kernels `g(t) = ||t||^alpha L(||t||)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::quad;
use crate::specfun::{bessel_k, gamma};

/// Concrete kernel families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelVariant {
    /// `g(r) = r^((nu-1)/2) K_((nu-1)/2)(lambda r)`, giving a Matern correlation
    /// of smoothness `nu`.
    Matern { nu: f64, lambda: f64 },
    /// `L(r) = exp(-r)`.
    ExpDecay,
    /// `L(r) = 1` for `r <= radius`, 0 beyond.
    PurePower { radius: f64 },
}

/// A kernel: roughness exponent, slowly varying factor and declared decay exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    alpha: f64,
    variant: KernelVariant,
    beta_decay: f64,
}

/// Default truncation radius of [`KernelVariant::PurePower`].
pub const DEFAULT_POWER_RADIUS: f64 = 1.0;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > -1.0 && alpha < 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("alpha = {alpha} must lie in (-1, 0)")))
    }
}

impl KernelSpec {
    pub fn matern(nu: f64, lambda: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::Validation(format!("Matern nu = {nu} must lie in (0, 1)")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Validation(format!("Matern lambda = {lambda} must be positive")));
        }
        Ok(KernelSpec {
            alpha: nu - 1.0,
            variant: KernelVariant::Matern { nu, lambda },
            beta_decay: f64::NEG_INFINITY,
        })
    }

    pub fn exp_decay(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(KernelSpec {
            alpha,
            variant: KernelVariant::ExpDecay,
            beta_decay: f64::NEG_INFINITY,
        })
    }

    pub fn pure_power(alpha: f64, radius: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(radius > 0.0) {
            return Err(Error::Validation(format!("truncation radius R = {radius} must be positive")));
        }
        Ok(KernelSpec {
            alpha,
            variant: KernelVariant::PurePower { radius },
            beta_decay: f64::NEG_INFINITY,
        })
    }

    /// Sets the declared tail exponent `beta` (`g(r) = O(r^beta)` as `r -> inf`).
    pub fn with_beta_decay(mut self, beta: f64) -> Result<Self> {
        if !(beta < -1.0) {
            return Err(Error::Validation(format!("decay exponent beta = {beta} must be < -1")));
        }
        self.beta_decay = beta;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    /// Declared decay exponent; `-inf` when the kernel decays faster than any power.
    pub fn beta_decay(&self) -> f64 {
        self.beta_decay
    }

    /// Slowly varying factor `L(r)`.
    pub fn eval_l(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(domain("eval_L", format!("radius r = {r} must be positive")));
        }
        Ok(match self.variant {
            KernelVariant::Matern { nu, lambda } => {
                let order = 0.5 * (nu - 1.0);
                r.powf(-order) * bessel_k(order, lambda * r)?
            }
            KernelVariant::ExpDecay => (-r).exp(),
            KernelVariant::PurePower { radius } => {
                if r <= radius {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }

    /// Radial kernel `g(r) = r^alpha L(r)`.
    pub fn eval_g(&self, r: f64) -> Result<f64> {
        Ok(r.powf(self.alpha) * self.eval_l(r)?)
    }

    /// `lim_{r -> 0} L(r)`.
    pub fn l_at_zero(&self) -> f64 {
        match self.variant {
            KernelVariant::Matern { nu, lambda } => matern_l_at_zero(nu, lambda),
            KernelVariant::ExpDecay | KernelVariant::PurePower { .. } => 1.0,
        }
    }

    /// Minimum of `L` over a logarithmic grid on `[1e-6, sqrt 2]`; positive
    /// when `L` is bounded away from zero near the origin.
    pub fn min_l_near_origin(&self) -> Result<f64> {
        let lo: f64 = 1e-6;
        let hi: f64 = 2f64.sqrt();
        let steps = 200;
        let mut min = f64::INFINITY;
        for k in 0..=steps {
            let r = lo * (hi / lo).powf(k as f64 / steps as f64);
            min = min.min(self.eval_l(r)?);
        }
        Ok(min)
    }

    /// Spot check of the declared decay: `g(x) x^(-beta)` must stay bounded
    /// (within a factor 10 of its value at 10) on a grid of `[10, 100]`.
    /// Always true for an undeclared (`-inf`) exponent.
    pub fn decay_spot_check(&self) -> Result<bool> {
        if self.beta_decay == f64::NEG_INFINITY {
            return Ok(true);
        }
        let f = |x: f64| -> Result<f64> { Ok(self.eval_g(x)?.abs() * x.powf(-self.beta_decay)) };
        let reference = f(10.0)?.max(f64::MIN_POSITIVE);
        for k in 0..=50 {
            let x = 10.0 * 10f64.powf(k as f64 / 50.0);
            if f(x)? > 10.0 * reference {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `int_{R^2} g(s)^2 ds = 2 pi int_0^inf g(r)^2 r dr` to absolute tolerance `tol`.
    ///
    /// On `(0, 1]` the substitution `r = u^(1/(2 alpha + 2))` absorbs the
    /// singular factor `r^(2 alpha + 1)`.
    pub fn g_squared_integral(&self, tol: f64) -> Result<f64> {
        let a = self.alpha;
        let p = 2.0 * a + 2.0;
        let cut = match self.variant {
            KernelVariant::PurePower { radius } => radius.min(1.0),
            _ => 1.0,
        };
        let inner_tol = tol / (6.0 * PI);
        let u_max = cut.powf(p);
        let inner = quad::integrate(
            |u| {
                if u <= 0.0 {
                    return self.l_at_zero().powi(2) / p;
                }
                let r = u.powf(1.0 / p).min(cut);
                self.eval_l(r).map(|l| l * l / p).unwrap_or(f64::NAN)
            },
            0.0,
            u_max,
            inner_tol,
        )?;
        let outer = match self.variant {
            KernelVariant::PurePower { radius } => {
                if radius > 1.0 {
                    (radius.powf(p) - 1.0) / p
                } else {
                    0.0
                }
            }
            _ => {
                quad::integrate_to_infinity(
                    |r| self.eval_g(r).map(|g| g * g * r).unwrap_or(f64::NAN),
                    1.0,
                    inner_tol,
                )?
                .value
            }
        };
        let total = 2.0 * PI * (inner.value + outer);
        if !total.is_finite() {
            return Err(Error::NonConvergence {
                estimate: f64::INFINITY,
                tol,
                evaluations: inner.evaluations,
            });
        }
        Ok(total)
    }

    /// Smallest `gamma` for which the mean-square error asymptotics hold:
    /// `-(1 + alpha) / (1 + beta)` (0 for an undeclared exponent).
    pub fn min_truncation_gamma(&self) -> f64 {
        if self.beta_decay == f64::NEG_INFINITY {
            0.0
        } else {
            -(1.0 + self.alpha) / (1.0 + self.beta_decay)
        }
    }
}

/// `lim_{r -> 0} L(r) = 2^(-(nu+1)/2) lambda^((nu-1)/2) Gamma((1-nu)/2)` for the Matern kernel.
pub fn matern_l_at_zero(nu: f64, lambda: f64) -> f64 {
    2f64.powf(-0.5 * (nu + 1.0)) * lambda.powf(0.5 * (nu - 1.0)) * gamma(0.5 * (1.0 - nu))
}

/// Matern correlation `(lambda r)^nu K_nu(lambda r) / (2^(nu-1) Gamma(nu))`, equal to 1 at `r = 0`.
pub fn matern_correlation(nu: f64, lambda: f64, r: f64) -> Result<f64> {
    if !(nu > 0.0) || !(lambda > 0.0) || r < 0.0 || r.is_nan() {
        return Err(domain(
            "matern_correlation",
            format!("need nu > 0, lambda > 0, r >= 0 (got {nu}, {lambda}, {r})"),
        ));
    }
    if r == 0.0 {
        return Ok(1.0);
    }
    let x = lambda * r;
    Ok(x.powf(nu) * bessel_k(nu, x)? / (2f64.powf(nu - 1.0) * gamma(nu)))
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variant {
            KernelVariant::Matern { nu, lambda } => write!(f, "matern:nu={nu},lambda={lambda}")?,
            KernelVariant::ExpDecay => write!(f, "expdecay:alpha={}", self.alpha)?,
            KernelVariant::PurePower { radius } => {
                write!(f, "power:alpha={},R={radius}", self.alpha)?
            }
        }
        if self.beta_decay != f64::NEG_INFINITY {
            write!(f, ",beta={}", self.beta_decay)?;
        }
        Ok(())
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Parses `matern:nu=<f>,lambda=<f>`, `expdecay:alpha=<f>` or
    /// `power:alpha=<f>,R=<f>`, each optionally followed by `,beta=<f>`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("kernel '{s}' lacks a '<family>:' prefix")))?;
        let mut params: Vec<(String, f64)> = Vec::new();
        for item in rest.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("kernel parameter '{item}' is not key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("kernel parameter '{item}' is not a number")))?;
            params.push((k.trim().to_string(), v));
        }
        let take = |key: &str| params.iter().find(|(k, _)| k == key).map(|(_, v)| *v);
        let allowed: &[&str] = match family.trim() {
            "matern" => &["nu", "lambda", "beta"],
            "expdecay" => &["alpha", "beta"],
            "power" => &["alpha", "R", "beta"],
            other => return Err(Error::Parse(format!("unknown kernel family '{other}'"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown kernel parameter '{k}' for '{family}'")));
        }
        let need = |key: &str| {
            take(key).ok_or_else(|| Error::Parse(format!("kernel '{s}' is missing '{key}'")))
        };
        let kernel = match family.trim() {
            "matern" => KernelSpec::matern(need("nu")?, need("lambda")?)?,
            "expdecay" => KernelSpec::exp_decay(need("alpha")?)?,
            _ => KernelSpec::pure_power(need("alpha")?, take("R").unwrap_or(DEFAULT_POWER_RADIUS))?,
        };
        match take("beta") {
            Some(beta) => kernel.with_beta_decay(beta),
            None => Ok(kernel),
        }
    }
}
