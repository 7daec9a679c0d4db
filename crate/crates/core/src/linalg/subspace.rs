use nalgebra::DMatrix;

use super::{svd, DenseMatrix, ORTHONORMAL_TOL};
use crate::error::{invalid, shape_mismatch, Error, Result};

/// Fails unless `q` has orthonormal columns within [`ORTHONORMAL_TOL`].
pub fn check_orthonormal(q: &DenseMatrix, which: &'static str) -> Result<()> {
    let m = q.as_nalgebra();
    let gram = m.transpose() * m;
    let dev = (gram - DMatrix::<f64>::identity(q.cols(), q.cols())).amax();
    if dev > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { which, deviation: dev });
    }
    Ok(())
}

fn check_frames(theta: &DenseMatrix, ur: &DenseMatrix, vr: &DenseMatrix) -> Result<()> {
    if ur.rows() != theta.rows() {
        return Err(shape_mismatch(
            "subspace projection (Ur)",
            (theta.rows(), ur.cols()),
            ur.shape(),
        ));
    }
    if vr.rows() != theta.cols() {
        return Err(shape_mismatch(
            "subspace projection (Vr)",
            (theta.cols(), vr.cols()),
            vr.shape(),
        ));
    }
    check_orthonormal(ur, "Ur")?;
    check_orthonormal(vr, "Vr")
}

/// `Ur Urᵀ Θ Vr Vrᵀ`: the part of Θ whose column space lies in col(Ur)
/// and whose row space lies in col(Vr).
pub fn project_subspace_a(theta: &DenseMatrix, ur: &DenseMatrix, vr: &DenseMatrix) -> Result<DenseMatrix> {
    check_frames(theta, ur, vr)?;
    let (u, v, t) = (ur.as_nalgebra(), vr.as_nalgebra(), theta.as_nalgebra());
    let core = u.transpose() * t * v;
    Ok(DenseMatrix::from_raw(u * core * v.transpose()))
}

/// `(I - Ur Urᵀ) Θ (I - Vr Vrᵀ)`: the part of Θ orthogonal to both frames.
pub fn project_subspace_b(theta: &DenseMatrix, ur: &DenseMatrix, vr: &DenseMatrix) -> Result<DenseMatrix> {
    check_frames(theta, ur, vr)?;
    let (u, v, t) = (ur.as_nalgebra(), vr.as_nalgebra(), theta.as_nalgebra());
    let left = t - u * (u.transpose() * t);
    let out = &left - (&left * v) * v.transpose();
    Ok(DenseMatrix::from_raw(out))
}

/// Leading `r` left and right singular vectors of `theta`.
pub fn top_singular_frames(theta: &DenseMatrix, r: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    let k = theta.rows().min(theta.cols());
    if r == 0 || r > k {
        return Err(invalid("r", r as f64, "must lie in 1..=min(d1, d2)"));
    }
    let f = svd(theta)?;
    let u = f.left.as_nalgebra().columns(0, r).into_owned();
    let v = f.right.as_nalgebra().columns(0, r).into_owned();
    Ok((DenseMatrix::from_raw(u), DenseMatrix::from_raw(v)))
}
