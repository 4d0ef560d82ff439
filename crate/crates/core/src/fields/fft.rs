//! Two-dimensional linear convolution of square matrices through the FFT.
//!
//! Matrices are row-major squares. For `a` of side `p` and `b` of side `q`
//! the full convolution has side `p + q - 1` with
//! `full[r][c] = sum a[r1][c1] b[r - r1][c - c1]`. When `p <= q` the valid
//! part is the block of side `q - p + 1` starting at `(p - 1, p - 1)`, where
//! every term of the sum stays inside `b`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// A row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Square {
    pub side: usize,
    pub data: Vec<f64>,
}

impl Square {
    pub fn new(side: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != side * side {
            return Err(Error::Validation(format!(
                "square of side {side} needs {} entries, got {}",
                side * side,
                data.len()
            )));
        }
        Ok(Square { side, data })
    }

    pub fn zeros(side: usize) -> Self {
        Square {
            side,
            data: vec![0.0; side * side],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.side + col]
    }
}

/// Smallest integer `>= target` whose prime factors are all in {2, 3, 5, 7}.
pub fn fast_len(target: usize) -> usize {
    let mut m = target.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Forward and inverse plans for an `m x m` periodic transform.
#[derive(Clone)]
struct Plan2 {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plan2 {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Plan2 {
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    fn transpose(&self, buf: &mut [Complex<f64>]) {
        let m = self.m;
        for r in 0..m {
            for c in r + 1..m {
                buf.swap(r * m + c, c * m + r);
            }
        }
    }

    /// Row transforms, transpose, row transforms: the spectrum is left transposed.
    fn forward(&self, buf: &mut [Complex<f64>]) {
        self.forward.process(buf);
        self.transpose(buf);
        self.forward.process(buf);
    }

    /// Inverse of [`Plan2::forward`] without the `1/m^2` normalization.
    fn inverse(&self, buf: &mut [Complex<f64>]) {
        self.inverse.process(buf);
        self.transpose(buf);
        self.inverse.process(buf);
    }
}

fn embed(src: &Square, m: usize) -> Vec<Complex<f64>> {
    let mut buf = vec![Complex::new(0.0, 0.0); m * m];
    for r in 0..src.side {
        for c in 0..src.side {
            buf[r * m + c] = Complex::new(src.get(r, c), 0.0);
        }
    }
    buf
}

/// A fixed left operand with its spectrum cached, for repeated valid
/// convolutions against right operands of one side.
#[derive(Clone)]
pub struct ValidConvolver {
    a_side: usize,
    b_side: usize,
    plan: Plan2,
    a_hat: Vec<Complex<f64>>,
}

impl ValidConvolver {
    /// Prepares `a` for right operands of side `b_side >= a.side`.
    ///
    /// A periodic transform of length at least `b_side` suffices: the valid
    /// outputs never wrap around.
    pub fn new(a: &Square, b_side: usize) -> Result<Self> {
        if a.side == 0 || b_side < a.side {
            return Err(Error::Validation(format!(
                "valid convolution needs 0 < side(a) = {} <= side(b) = {b_side}",
                a.side
            )));
        }
        let m = fast_len(b_side);
        let plan = Plan2::new(m);
        let mut a_hat = embed(a, m);
        plan.forward(&mut a_hat);
        Ok(ValidConvolver {
            a_side: a.side,
            b_side,
            plan,
            a_hat,
        })
    }

    /// Side of the valid output, `side(b) - side(a) + 1`.
    pub fn out_side(&self) -> usize {
        self.b_side - self.a_side + 1
    }

    /// Valid part of the convolution of the cached operand with `b`.
    pub fn apply(&self, b: &Square) -> Result<Square> {
        if b.side != self.b_side {
            return Err(Error::Validation(format!(
                "convolver prepared for side {}, got {}",
                self.b_side, b.side
            )));
        }
        let m = self.plan.m;
        let mut buf = embed(b, m);
        self.plan.forward(&mut buf);
        for (x, y) in buf.iter_mut().zip(&self.a_hat) {
            *x *= *y;
        }
        self.plan.inverse(&mut buf);
        let norm = 1.0 / (m * m) as f64;
        let side = self.out_side();
        let off = self.a_side - 1;
        let mut out = Vec::with_capacity(side * side);
        for r in 0..side {
            for c in 0..side {
                out.push(buf[(r + off) * m + c + off].re * norm);
            }
        }
        Ok(Square { side, data: out })
    }
}

/// Full linear convolution (side `side(a) + side(b) - 1`) via zero padding.
pub fn conv2_fft(a: &Square, b: &Square) -> Square {
    let side = a.side + b.side - 1;
    let m = fast_len(side);
    let plan = Plan2::new(m);
    let mut fa = embed(a, m);
    let mut fb = embed(b, m);
    plan.forward(&mut fa);
    plan.forward(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    plan.inverse(&mut fa);
    let norm = 1.0 / (m * m) as f64;
    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            out.push(fa[r * m + c].re * norm);
        }
    }
    Square { side, data: out }
}

/// Valid part of the convolution (side `side(b) - side(a) + 1`), requiring `side(a) <= side(b)`.
pub fn conv2_fft_valid(a: &Square, b: &Square) -> Result<Square> {
    ValidConvolver::new(a, b.side)?.apply(b)
}

/// Periodic 2D spectrum of a real `m x m` array, returned in transposed
/// layout (`out[c * m + r]` is frequency `(r, c)`).
pub(crate) fn spectrum_transposed(data: &[f64], m: usize) -> Vec<Complex<f64>> {
    let plan = Plan2::new(m);
    let mut buf: Vec<Complex<f64>> = data.iter().map(|&v| Complex::new(v, 0.0)).collect();
    plan.forward(&mut buf);
    buf
}

/// Unnormalized forward 2D DFT of a complex `m x m` array in natural layout.
pub(crate) fn dft2(buf: &mut [Complex<f64>], m: usize) {
    let plan = Plan2::new(m);
    plan.forward(buf);
    plan.transpose(buf);
}
