//! Low-rank multi-response regression with corrupted covariates: data
//! generation, surrogate construction, a constrained proximal gradient
//! solver and the accompanying diagnostics.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod solver;
pub mod surrogate;

pub use data::{
    gen_dataset, gen_ground_truth_exact, gen_ground_truth_lq, CorruptionSpec, CovarianceSpec, GroundTruth, MissingMask,
    ProblemInstance, TruthKind,
};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, NormKind, SvdFactors};
pub use solver::{solve, SolverConfig, SolverResult, SolverTrace, TraceEntry};
pub use surrogate::{build_for_instance, SurrogatePair};
