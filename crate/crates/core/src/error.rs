use thiserror::Error;

/// Errors raised by the numerical routines and the simulation engines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A result overflowed the floating-point range.
    #[error("overflow in {op}: {detail}")]
    Overflow { op: &'static str, detail: String },

    /// An adaptive quadrature ran out of its subdivision budget.
    #[error("quadrature did not converge: estimated error {estimate:.3e} > tolerance {tol:.3e} after {evaluations} evaluations")]
    NonConvergence {
        estimate: f64,
        tol: f64,
        evaluations: usize,
    },

    /// A covariance matrix could not be factorized even after jitter.
    #[error("covariance matrix is not positive definite (pivot {pivot} = {value:.3e} after jitter {jitter:.3e})")]
    NotPositiveDefinite {
        pivot: usize,
        value: f64,
        jitter: f64,
    },

    /// Circulant embedding produced negative eigenvalues at every padding tried.
    #[error("circulant embedding failed: most negative eigenvalue {min_eigenvalue:.3e} (largest {max_eigenvalue:.3e}) on a torus of side {torus_side}")]
    EmbeddingFailure {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
        torus_side: usize,
    },

    /// The input carries no information for the requested estimate.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A model or parameter combination violates a documented invariant.
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
