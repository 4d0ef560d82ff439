//! Monte Carlo roughness study with the square-increment estimator.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::covariance::MAX_KAPPA;
use crate::error::{Error, Result};
use crate::fields::{CirculantEmbedding, FieldGrid, HybridEngine, RiemannEngine, SchemeParams};
use crate::kernels::{matern_correlation, KernelSpec, KernelVariant};

use super::variogram::square_increment_dim;

/// Simulation method compared in a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Hybrid { kappa: usize },
    Riemann,
    Circulant,
}

impl Scheme {
    /// Scheme name without the order.
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Hybrid { .. } => "hybrid",
            Scheme::Riemann => "riemann",
            Scheme::Circulant => "circulant",
        }
    }

    /// Hybrid order, 0 for the other schemes.
    pub fn kappa(&self) -> usize {
        match self {
            Scheme::Hybrid { kappa } => *kappa,
            _ => 0,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Hybrid { kappa } => write!(f, "hybrid:{kappa}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    /// `hybrid` (order 1), `hybrid:<kappa>`, `riemann` or `circulant`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "hybrid" => return Ok(Scheme::Hybrid { kappa: 1 }),
            "riemann" => return Ok(Scheme::Riemann),
            "circulant" => return Ok(Scheme::Circulant),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("hybrid:") {
            let kappa: usize = k
                .parse()
                .map_err(|_| Error::Parse(format!("invalid hybrid order '{k}'")))?;
            if kappa > MAX_KAPPA {
                return Err(Error::Parse(format!("hybrid order {kappa} exceeds {MAX_KAPPA}")));
            }
            return Ok(Scheme::Hybrid { kappa });
        }
        Err(Error::Parse(format!(
            "unknown scheme '{s}' (hybrid, hybrid:<kappa>, riemann, circulant)"
        )))
    }
}

/// Kernel family indexed by the roughness exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    /// Matern kernel with `nu = alpha + 1`.
    Matern { lambda: f64 },
    /// `L(r) = exp(-r)`.
    ExpDecay,
}

impl KernelFamily {
    pub fn kernel(&self, alpha: f64) -> Result<KernelSpec> {
        match self {
            KernelFamily::Matern { lambda } => KernelSpec::matern(alpha + 1.0, *lambda),
            KernelFamily::ExpDecay => KernelSpec::exp_decay(alpha),
        }
    }
}

/// Summary for one `(alpha, scheme)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughnessRow {
    pub alpha: f64,
    pub scheme: Scheme,
    pub mean_dim: f64,
    pub var_dim: f64,
    /// Replicates with a usable estimate.
    pub replicates: usize,
    /// Replicates skipped because the estimate was degenerate.
    pub skipped: usize,
    /// Wall time of the first replicate including setup, in seconds.
    pub seconds_first: f64,
    /// Wall time of all replicates including setup, in seconds.
    pub seconds_total: f64,
}

/// Result of [`roughness_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct RoughnessReport {
    pub n: usize,
    pub gamma: f64,
    pub rows: Vec<RoughnessRow>,
}

impl RoughnessReport {
    /// CSV with header `alpha,scheme,kappa,mean_dim,var_dim,replicates`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "alpha,scheme,kappa,mean_dim,var_dim,replicates")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.10},{:.10e},{}",
                r.alpha,
                r.scheme.name(),
                r.scheme.kappa(),
                r.mean_dim,
                r.var_dim,
                r.replicates
            )?;
        }
        Ok(())
    }

    /// Timing CSV with header `alpha,scheme,kappa,seconds_first,seconds_total,replicates`.
    pub fn write_timing_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "alpha,scheme,kappa,seconds_first,seconds_total,replicates")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.6},{:.6},{}",
                r.alpha,
                r.scheme.name(),
                r.scheme.kappa(),
                r.seconds_first,
                r.seconds_total,
                r.replicates + r.skipped
            )?;
        }
        Ok(())
    }

    /// `alpha,scheme,mean_dim` pairs for plotting.
    pub fn write_plot_data<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "scheme,alpha,mean_dim")?;
        for r in &self.rows {
            writeln!(out, "{},{},{:.10}", r.scheme, r.alpha, r.mean_dim)?;
        }
        Ok(())
    }
}

/// Mean and unbiased sample variance.
pub(crate) fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

enum Prepared {
    Hybrid(HybridEngine),
    Riemann(RiemannEngine),
    Circulant(CirculantEmbedding),
}

impl Prepared {
    fn new(kernel: &KernelSpec, scheme: Scheme, base: &SchemeParams) -> Result<Self> {
        Ok(match scheme {
            Scheme::Hybrid { kappa } => {
                let mut p = *base;
                p.kappa = kappa;
                Prepared::Hybrid(HybridEngine::new(kernel, &p, p.n)?)
            }
            Scheme::Riemann => Prepared::Riemann(RiemannEngine::new(kernel, base)?),
            Scheme::Circulant => {
                let KernelVariant::Matern { nu, lambda } = kernel.variant() else {
                    return Err(Error::Validation(
                        "the circulant baseline needs a closed-form correlation (Matern kernels)".into(),
                    ));
                };
                let variance = kernel.g_squared_integral(1e-10)?;
                Prepared::Circulant(CirculantEmbedding::new(
                    |r| matern_correlation(nu, lambda, r).unwrap_or(f64::NAN),
                    variance,
                    base.n,
                )?)
            }
        })
    }

    fn simulate(&self, n: usize, seed: u64, replicate: u64) -> Result<FieldGrid> {
        match self {
            Prepared::Hybrid(e) => FieldGrid::on_unit_square(n, e.simulate(seed, replicate, None)?.data),
            Prepared::Riemann(e) => FieldGrid::on_unit_square(n, e.simulate(seed, replicate, None)?.data),
            Prepared::Circulant(e) => e.sample(seed, replicate),
        }
    }
}

/// Simulates `replicates` fields (constant volatility 1) for every
/// `(alpha, scheme)` pair and summarizes the dimension estimates.
///
/// Replicate `r` uses the random streams of replicate `r` under
/// `base.seed`; degenerate estimates are skipped and counted.
pub fn roughness_study(
    family: KernelFamily,
    alphas: &[f64],
    schemes: &[Scheme],
    base: &SchemeParams,
    replicates: usize,
) -> Result<RoughnessReport> {
    if replicates < 2 {
        return Err(Error::Validation(format!("need at least 2 replicates, got {replicates}")));
    }
    base.validate()?;
    let mut rows = Vec::with_capacity(alphas.len() * schemes.len());
    for &alpha in alphas {
        let kernel = family.kernel(alpha)?;
        for &scheme in schemes {
            let start = Instant::now();
            let prepared = Prepared::new(&kernel, scheme, base)?;
            let first = prepared.simulate(base.n, base.seed, 0).and_then(|g| match square_increment_dim(&g) {
                Ok(d) => Ok(Some(d)),
                Err(Error::DegenerateInput(_)) => Ok(None),
                Err(e) => Err(e),
            })?;
            let seconds_first = start.elapsed().as_secs_f64();
            let rest: Vec<Result<Option<f64>>> = (1..replicates as u64)
                .into_par_iter()
                .map(|r| {
                    let g = prepared.simulate(base.n, base.seed, r)?;
                    match square_increment_dim(&g) {
                        Ok(d) => Ok(Some(d)),
                        Err(Error::DegenerateInput(_)) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect();
            let mut estimates = Vec::with_capacity(replicates);
            estimates.extend(first);
            for r in rest {
                estimates.extend(r?);
            }
            let seconds_total = start.elapsed().as_secs_f64();
            if estimates.is_empty() {
                return Err(Error::DegenerateInput(format!(
                    "every replicate was degenerate for alpha = {alpha}, scheme {scheme}"
                )));
            }
            let (mean_dim, var_dim) = mean_and_variance(&estimates);
            rows.push(RoughnessRow {
                alpha,
                scheme,
                mean_dim,
                var_dim,
                replicates: estimates.len(),
                skipped: replicates - estimates.len(),
                seconds_first,
                seconds_total,
            });
        }
    }
    Ok(RoughnessReport {
        n: base.n,
        gamma: base.gamma,
        rows,
    })
}
