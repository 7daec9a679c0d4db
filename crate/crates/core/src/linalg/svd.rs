use nalgebra::{Cholesky, DMatrix, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{shape_mismatch, Error, Result};

const SVD_MAX_ITERS: usize = 10_000;
const EIGEN_MAX_ITERS: usize = 10_000;

/// Thin SVD `A = U diag(s) Vᵀ` with `k = min(rows, cols)` components.
///
/// Singular values are nonnegative and sorted nonincreasing. Factors are
/// unique only up to sign flips and rotations inside repeated singular
/// values; nothing downstream depends on a canonical choice.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    /// `rows x k`, orthonormal columns.
    pub left: DenseMatrix,
    pub singulars: Vec<f64>,
    /// `cols x k`, orthonormal columns.
    pub right: DenseMatrix,
}

impl SvdFactors {
    pub fn rank(&self, tol: f64) -> usize {
        self.singulars.iter().filter(|&&s| s > tol).count()
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.singulars.iter().sum()
    }

    /// `U diag(values) Vᵀ` for a replacement spectrum of length `k`.
    pub fn recompose_with(&self, values: &[f64]) -> DenseMatrix {
        assert_eq!(values.len(), self.singulars.len(), "spectrum length mismatch");
        let u = self.left.as_nalgebra();
        let v = self.right.as_nalgebra();
        let mut scaled = u.clone();
        for (j, &s) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(s);
        }
        DenseMatrix::from_raw(scaled * v.transpose())
    }

    pub fn recompose(&self) -> DenseMatrix {
        self.recompose_with(&self.singulars)
    }
}

/// Thin singular value decomposition.
///
/// The result is checked against the input (relative reconstruction error
/// at most `1e-8`); nalgebra's bidiagonal iteration can stall on
/// rank-deficient input at very tight tolerances and return a wrong
/// spectrum, so a failed check retries with a looser tolerance before
/// giving up.
pub fn svd(a: &DenseMatrix) -> Result<SvdFactors> {
    let (rows, cols) = a.shape();
    let scale = a.frobenius_norm();
    for eps_factor in [5.0, 100.0, 1e4] {
        let Some(f) = svd_once(a, eps_factor * f64::EPSILON) else {
            continue;
        };
        let err = (&f.recompose() - a).frobenius_norm();
        if err <= RECONSTRUCTION_TOL * scale.max(f64::MIN_POSITIVE) {
            return Ok(f);
        }
    }
    Err(Error::SvdNoConvergence { rows, cols })
}

const RECONSTRUCTION_TOL: f64 = 1e-8;

fn svd_once(a: &DenseMatrix, eps: f64) -> Option<SvdFactors> {
    let dec = SVD::try_new(a.as_nalgebra().clone(), true, true, eps, SVD_MAX_ITERS)?;
    let u = dec.u?;
    let v_t = dec.v_t?;
    let singulars: Vec<f64> = dec.singular_values.iter().map(|s| s.max(0.0)).collect();
    if singulars.iter().any(|s| !s.is_finite()) {
        return None;
    }
    Some(SvdFactors {
        left: DenseMatrix::from_raw(u),
        singulars,
        right: DenseMatrix::from_raw(v_t.transpose()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Nuclear,
    Operator,
    Frobenius,
}

pub fn matrix_norm(a: &DenseMatrix, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Frobenius => Ok(a.frobenius_norm()),
        NormKind::Nuclear => nuclear_norm(a),
        NormKind::Operator => operator_norm(a),
    }
}

pub fn nuclear_norm(a: &DenseMatrix) -> Result<f64> {
    let s = singular_values(a)?;
    Ok(s.iter().sum())
}

pub fn operator_norm(a: &DenseMatrix) -> Result<f64> {
    let s = singular_values(a)?;
    Ok(s.iter().fold(0.0_f64, |m, &x| m.max(x)))
}

fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    let (rows, cols) = a.shape();
    let dec = SVD::try_new(a.as_nalgebra().clone(), false, false, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::SvdNoConvergence { rows, cols })?;
    Ok(dec.singular_values.iter().map(|s| s.abs()).collect())
}

/// `trace(AᵀB)`, the sum of entrywise products.
pub fn trace_inner(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(shape_mismatch("trace_inner", a.shape(), b.shape()));
    }
    Ok(a.as_nalgebra().dot(b.as_nalgebra()))
}

fn check_symmetric(a: &DenseMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(shape_mismatch("symmetric matrix", (a.rows(), a.rows()), a.shape()));
    }
    let asym = a.asymmetry();
    let tol = 1e-10 * a.max_abs().max(1.0);
    if asym > tol {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    check_symmetric(a)?;
    let n = a.rows();
    let eig = SymmetricEigen::try_new(a.as_nalgebra().clone(), f64::EPSILON, EIGEN_MAX_ITERS)
        .ok_or(Error::EigenNoConvergence { dim: n })?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

pub fn lambda_min(a: &DenseMatrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(a)?[0])
}

pub fn lambda_max(a: &DenseMatrix) -> Result<f64> {
    Ok(*symmetric_eigenvalues(a)?.last().expect("nonempty spectrum"))
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
pub fn cholesky_lower(a: &DenseMatrix) -> Result<DenseMatrix> {
    check_symmetric(a).map_err(|_| Error::NotPositiveDefinite)?;
    let chol: Option<Cholesky<f64, nalgebra::Dyn>> = Cholesky::new(a.as_nalgebra().clone());
    let l: DMatrix<f64> = chol.ok_or(Error::NotPositiveDefinite)?.unpack();
    Ok(DenseMatrix::from_raw(l))
}
