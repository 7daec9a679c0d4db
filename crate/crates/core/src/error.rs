use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid value {value} for `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("SVD failed to converge on a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize },

    #[error("symmetric eigensolver failed to converge on a {dim}x{dim} matrix")]
    EigenNoConvergence { dim: usize },

    #[error("{which} does not have orthonormal columns (Gram deviation {deviation:.3e})")]
    NotOrthonormal { which: &'static str, deviation: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("covariance matrix is not positive definite (Cholesky failed)")]
    NotPositiveDefinite,

    #[error("spectrum is infeasible: {0}")]
    InfeasibleSpectrum(&'static str),

    #[error(
        "solver diverged at iteration {iteration}: objective {objective:e}, \
         nuclear norm {nuclear_norm:e}"
    )]
    Diverged {
        iteration: usize,
        objective: f64,
        nuclear_norm: f64,
        last_finite_objective: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter { name, value, reason }
}

pub(crate) fn shape_mismatch(op: &'static str, expected: (usize, usize), found: (usize, usize)) -> Error {
    Error::DimensionMismatch {
        op,
        expected: format!("{}x{}", expected.0, expected.1),
        found: format!("{}x{}", found.0, found.1),
    }
}
