//! Dense linear-algebra kernels: the matrix carrier type, SVD, norms, the
//! nuclear-norm proximal map, the nuclear-ball projection and the
//! subspace projections attached to a pair of singular-vector frames.

mod matrix;
mod prox;
mod subspace;
mod svd;

pub use matrix::DenseMatrix;
pub(crate) use prox::{project_factors, soft_threshold_factors};
pub use prox::{project_l1_ball_nonneg, project_nuclear_ball, singular_value_soft_threshold};
pub use subspace::{check_orthonormal, project_subspace_a, project_subspace_b, top_singular_frames};
pub use svd::{
    cholesky_lower, lambda_max, lambda_min, matrix_norm, nuclear_norm, operator_norm, svd, symmetric_eigenvalues,
    trace_inner, NormKind, SvdFactors,
};

/// Orthonormality tolerance on column Gram matrices.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Slack allowed on the nuclear-ball constraint after a projection.
pub const FEASIBILITY_SLACK: f64 = 1e-10;

/// Singular values at or below this are treated as zero when counting rank.
pub const RANK_TOL: f64 = 1e-8;
