//! Exact stationary Gaussian fields by circulant embedding.

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};

use super::fft::{dft2, fast_len, spectrum_transposed};
use super::grid::FieldGrid;
use super::rng::{fill_normal, stream, StreamRole};

/// Relative tolerance for negative embedding eigenvalues.
const EIGEN_TOL: f64 = 1e-10;
/// Number of times the torus may be doubled.
const MAX_DOUBLINGS: usize = 3;

/// Embedding of an isotropic covariance on a torus, reusable across replicates.
#[derive(Debug, Clone)]
pub struct CirculantEmbedding {
    n: usize,
    torus: usize,
    /// `sqrt(max(lambda, 0) / torus^2)` in natural layout.
    amplitude: Vec<f64>,
}

impl CirculantEmbedding {
    /// Embeds `variance * correlation(r)` for the grid `{-n..n}^2 / n`.
    ///
    /// The torus side starts at the first fast length `>= 2 (2n + 1)` and is
    /// doubled up to three times while the smallest eigenvalue is below
    /// `-1e-10` times the largest.
    pub fn new<F: Fn(f64) -> f64>(correlation: F, variance: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("n must be positive".into()));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::Validation(format!("variance {variance} must be positive")));
        }
        let mut torus = fast_len(2 * (2 * n + 1));
        let spacing = 1.0 / n as f64;
        let mut attempt = 0;
        loop {
            let m = torus;
            let lag: Vec<f64> = (0..m).map(|k| k.min(m - k) as f64 * spacing).collect();
            let mut cov = vec![0.0; m * m];
            for r in 0..m {
                for c in 0..m {
                    cov[r * m + c] = variance * correlation(lag[r].hypot(lag[c]));
                }
            }
            if let Some(i) = cov.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("correlation is not finite at torus entry {i}")));
            }
            let spectrum = spectrum_transposed(&cov, m);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for z in &spectrum {
                lo = lo.min(z.re);
                hi = hi.max(z.re);
            }
            if lo >= -EIGEN_TOL * hi {
                // The covariance is symmetric under transposition, so the
                // transposed spectrum equals the natural one.
                let norm = 1.0 / (m * m) as f64;
                let amplitude = spectrum.iter().map(|z| (z.re.max(0.0) * norm).sqrt()).collect();
                return Ok(CirculantEmbedding { n, torus: m, amplitude });
            }
            if attempt == MAX_DOUBLINGS {
                return Err(Error::EmbeddingFailure {
                    min_eigenvalue: lo,
                    max_eigenvalue: hi,
                    torus_side: m,
                });
            }
            attempt += 1;
            torus = fast_len(2 * m);
        }
    }

    pub fn torus_side(&self) -> usize {
        self.torus
    }

    /// Two independent exact realizations (real and imaginary parts of one synthesis).
    pub fn sample_pair(&self, seed: u64, replicate: u64) -> Result<(FieldGrid, FieldGrid)> {
        let m = self.torus;
        let mut z = vec![0.0; 2 * m * m];
        fill_normal(&mut stream(seed, replicate, StreamRole::Circulant), &mut z);
        let mut buf: Vec<Complex<f64>> = z
            .chunks_exact(2)
            .zip(&self.amplitude)
            .map(|(p, a)| Complex::new(a * p[0], a * p[1]))
            .collect();
        dft2(&mut buf, m);
        let side = 2 * self.n + 1;
        let mut re = Vec::with_capacity(side * side);
        let mut im = Vec::with_capacity(side * side);
        for r in 0..side {
            for c in 0..side {
                re.push(buf[r * m + c].re);
                im.push(buf[r * m + c].im);
            }
        }
        Ok((
            FieldGrid::on_unit_square(self.n, re)?,
            FieldGrid::on_unit_square(self.n, im)?,
        ))
    }

    /// One exact realization.
    pub fn sample(&self, seed: u64, replicate: u64) -> Result<FieldGrid> {
        Ok(self.sample_pair(seed, replicate)?.0)
    }
}

/// Exact realization of the stationary field with covariance `variance * correlation(r)`.
pub fn circulant_simulate<F: Fn(f64) -> f64>(
    correlation: F,
    variance: f64,
    n: usize,
    seed: u64,
    replicate: u64,
) -> Result<FieldGrid> {
    CirculantEmbedding::new(correlation, variance, n)?.sample(seed, replicate)
}
