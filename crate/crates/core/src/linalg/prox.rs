use super::{svd, DenseMatrix, SvdFactors};
use crate::error::{invalid, Result};

/// Proximal map of `t * ||.||_*`: shrinks every singular value by `t`,
/// clipping at zero.
pub fn singular_value_soft_threshold(a: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("t", t, "threshold must be a finite nonnegative number"));
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    let factors = svd(a)?;
    Ok(soft_threshold_factors(&factors, t).0)
}

/// Euclidean projection onto `{Θ : ||Θ||_* <= omega}`.
///
/// Feasible inputs are returned unchanged. Otherwise the spectrum is
/// projected onto the ℓ1 ball of radius `omega` and recomposed with the
/// original singular vectors.
pub fn project_nuclear_ball(a: &DenseMatrix, omega: f64) -> Result<DenseMatrix> {
    if !(omega >= 0.0) || !omega.is_finite() {
        return Err(invalid("omega", omega, "radius must be a finite nonnegative number"));
    }
    let factors = svd(a)?;
    if factors.nuclear_norm() <= omega {
        return Ok(a.clone());
    }
    Ok(project_factors(&factors, omega).0)
}

pub(crate) fn soft_threshold_factors(f: &SvdFactors, t: f64) -> (DenseMatrix, f64) {
    let shrunk: Vec<f64> = f.singulars.iter().map(|s| (s - t).max(0.0)).collect();
    let norm = shrunk.iter().sum();
    (f.recompose_with(&shrunk), norm)
}

pub(crate) fn project_factors(f: &SvdFactors, omega: f64) -> (DenseMatrix, f64) {
    let projected = project_l1_ball_nonneg(&f.singulars, omega);
    let norm = projected.iter().sum();
    (f.recompose_with(&projected), norm)
}

/// Projects a nonnegative vector onto the ℓ1 ball of the given radius with
/// the sorted cumulative-sum rule. Order of the input is preserved.
pub fn project_l1_ball_nonneg(values: &[f64], radius: f64) -> Vec<f64> {
    debug_assert!(values.iter().all(|&v| v >= 0.0));
    let total: f64 = values.iter().sum();
    if total <= radius {
        return values.to_vec();
    }
    if radius <= 0.0 {
        return vec![0.0; values.len()];
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    let mut out: Vec<f64> = values.iter().map(|&v| (v - theta).max(0.0)).collect();
    // Rounding in the cumulative sum can leave the result a few ulps outside.
    let s: f64 = out.iter().sum();
    if s > radius {
        let shrink = radius / s;
        out.iter_mut().for_each(|v| *v *= shrink);
    }
    out
}
