//! Covariance of the correlated Gaussian family used by the hybrid scheme,
//! evaluation points, and the asymptotic error constant.
//!
//! For `j` in `K = {-kappa..kappa}^2` the family consists of
//! `W_{0,j} = int_{cell_n} ||j/n - s||^alpha W(ds)` and the plain cell
//! integral `W_0 = W(cell_n)`, where `cell_n` is the square of side `1/n`
//! centred at the origin. Entries are
//! `C_{j,j} = n^(-2-2 alpha) int_cell ||x - j||^(2 alpha) dx`,
//! `C_{1,j} = n^(-2-alpha) int_cell ||x - j||^alpha dx`,
//! `C_{j1,j2} = n^(-2-2 alpha) int_cell ||j1 - s||^alpha ||j2 - s||^alpha ds`
//! and `C_{1,1} = n^-2`.

mod closed_form;
mod cross;
mod jconst;
mod policy;

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

pub use closed_form::{box_power_integral, box_power_integral_any, octant, triangle_integral};
pub use cross::{cross_covariance_integral, DEFAULT_CROSS_TOL};
pub use jconst::{j_constant, JTable, DEFAULT_TRUNCATION};
pub use policy::{
    cell_index, central_cells, central_l_coefficient, optimal_b_norm, power_cell_weights, CentralMode,
    EvaluationPolicy, PointMode,
};

use crate::error::{Error, Result};

/// Largest supported hybrid order.
pub const MAX_KAPPA: usize = 5;

/// Covariance matrix of `((W_{0,j})_{j in K}, W_0)` with its Cholesky factor.
///
/// Ordering: cells of `K` in row-major order (first coordinate slow), then
/// the plain cell integral last.
#[derive(Debug, Clone)]
pub struct CovarianceBlock {
    kappa: usize,
    alpha: f64,
    n: usize,
    matrix: DMatrix<f64>,
    chol: DMatrix<f64>,
    jitter: f64,
}

/// The 8 symmetries of the square lattice fixing the origin.
fn dihedral(q: usize, j: (i64, i64)) -> (i64, i64) {
    let (a, b) = j;
    match q {
        0 => (a, b),
        1 => (-a, b),
        2 => (a, -b),
        3 => (-a, -b),
        4 => (b, a),
        5 => (-b, a),
        6 => (b, -a),
        _ => (-b, -a),
    }
}

/// Canonical representative of the orbit of an unordered cell pair.
fn canonical_pair(j1: (i64, i64), j2: (i64, i64)) -> ((i64, i64), (i64, i64)) {
    let mut best = None;
    for q in 0..8 {
        let (a, b) = (dihedral(q, j1), dihedral(q, j2));
        let pair = if a <= b { (a, b) } else { (b, a) };
        best = match best {
            Some(cur) if cur <= pair => Some(cur),
            _ => Some(pair),
        };
    }
    best.expect("eight candidates")
}

/// Builds the covariance matrix at `n = 1` (no factorization).
fn unit_matrix(alpha: f64, kappa: usize, tol: f64) -> Result<DMatrix<f64>> {
    let cells = central_cells(kappa);
    let m = cells.len();
    let dim = m + 1;
    let mut reps: Vec<((i64, i64), (i64, i64))> = Vec::new();
    let mut seen = HashMap::new();
    for (i, &a) in cells.iter().enumerate() {
        for &b in &cells[i + 1..] {
            let key = canonical_pair(a, b);
            if seen.insert(key, ()).is_none() {
                reps.push(key);
            }
        }
    }
    let values: Vec<Result<f64>> = reps
        .par_iter()
        .map(|&(a, b)| cross_covariance_integral(a, b, alpha, tol))
        .collect();
    let mut cross = HashMap::with_capacity(reps.len());
    for (key, value) in reps.into_iter().zip(values) {
        cross.insert(key, value?);
    }
    let mut mat = DMatrix::zeros(dim, dim);
    for (i, &a) in cells.iter().enumerate() {
        mat[(i, i)] = box_power_integral_any(a, 2.0 * alpha)?;
        let plain = box_power_integral_any(a, alpha)?;
        mat[(i, m)] = plain;
        mat[(m, i)] = plain;
        for (k, &b) in cells.iter().enumerate().skip(i + 1) {
            let v = cross[&canonical_pair(a, b)];
            mat[(i, k)] = v;
            mat[(k, i)] = v;
        }
    }
    mat[(m, m)] = 1.0;
    Ok(mat)
}

impl CovarianceBlock {
    /// Builds and factors the block for `(alpha, kappa, n)`; `tol` is the
    /// absolute tolerance of the cross integrals at `n = 1`.
    ///
    /// Entries are computed at `n = 1` (one cross integral per symmetry
    /// orbit) and scaled by `S M S` with `S = diag(n^(-1-alpha), ..., n^-1)`.
    /// If the Cholesky factorization fails, a diagonal jitter of
    /// `1e-12 trace / dim` is added once before giving up.
    pub fn build(alpha: f64, kappa: usize, n: usize, tol: f64) -> Result<Self> {
        if !(alpha > -1.0 && alpha < 0.0) {
            return Err(Error::Validation(format!("alpha = {alpha} outside (-1, 0)")));
        }
        if kappa > MAX_KAPPA {
            return Err(Error::Validation(format!("kappa = {kappa} exceeds {MAX_KAPPA}")));
        }
        if n == 0 {
            return Err(Error::Validation("n must be positive".into()));
        }
        let unit = unit_matrix(alpha, kappa, tol)?;
        let dim = unit.nrows();
        let nf = n as f64;
        let power_scale = nf.powf(-1.0 - alpha);
        let plain_scale = 1.0 / nf;
        let scale = |i: usize| if i + 1 == dim { plain_scale } else { power_scale };
        let mut matrix = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for k in i..dim {
                let v = scale(i) * unit[(i, k)] * scale(k);
                matrix[(i, k)] = v;
                matrix[(k, i)] = v;
            }
        }
        matrix[(dim - 1, dim - 1)] = 1.0 / (nf * nf);
        let (chol, jitter) = factor(&matrix)?;
        Ok(CovarianceBlock {
            kappa,
            alpha,
            n,
            matrix,
            chol,
            jitter,
        })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Side length `(2 kappa + 1)^2 + 1`.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower-triangular factor `L` with `L L^T = matrix + jitter I`.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Diagonal jitter that was needed for the factorization (usually 0).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Smallest and largest eigenvalues of the matrix.
    pub fn eigen_range(&self) -> (f64, f64) {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }

    /// Writes the matrix as CSV rows `i,j,value` in block order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,j,value")?;
        for i in 0..self.dim() {
            for k in 0..self.dim() {
                writeln!(out, "{i},{k},{:.17e}", self.matrix[(i, k)])?;
            }
        }
        Ok(())
    }
}

/// Free-function form of [`CovarianceBlock::build`].
pub fn build_block(alpha: f64, kappa: usize, n: usize, tol: f64) -> Result<CovarianceBlock> {
    CovarianceBlock::build(alpha, kappa, n, tol)
}

fn factor(matrix: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if let Some(c) = matrix.clone().cholesky() {
        return Ok((c.l(), 0.0));
    }
    let dim = matrix.nrows();
    let jitter = 1e-12 * matrix.trace() / dim as f64;
    let mut shifted = matrix.clone();
    for i in 0..dim {
        shifted[(i, i)] += jitter;
    }
    if let Some(c) = shifted.cholesky() {
        return Ok((c.l(), jitter));
    }
    let eig = SymmetricEigen::new(matrix.clone());
    let (pivot, value) = eig
        .eigenvalues
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    Err(Error::NotPositiveDefinite { pivot, value, jitter })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_pairs_are_orbit_invariant() {
        let a = (1, -2);
        let b = (0, 1);
        let key = canonical_pair(a, b);
        for q in 0..8 {
            assert_eq!(canonical_pair(dihedral(q, a), dihedral(q, b)), key);
            assert_eq!(canonical_pair(dihedral(q, b), dihedral(q, a)), key);
        }
    }

    #[test]
    fn kappa_zero_block_layout() {
        let b = CovarianceBlock::build(-0.5, 0, 10, DEFAULT_CROSS_TOL).unwrap();
        assert_eq!(b.dim(), 2);
        let m = b.matrix();
        assert_eq!(m[(1, 1)], 1.0 / 100.0);
        let c00 = box_power_integral((0, 0), -1.0).unwrap() * 10f64.powf(-1.0);
        assert!((m[(0, 0)] - c00).abs() < 1e-15);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }
}
