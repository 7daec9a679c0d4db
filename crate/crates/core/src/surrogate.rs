//! Plug-in replacements `(Γ̂, Υ̂)` for `(XᵀX/n, XᵀY/n)` built from the
//! observed covariates of each corruption channel.

use nalgebra::DMatrix;

use crate::data::{check_rho, CorruptionSpec, ProblemInstance};
use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::{symmetric_eigenvalues, DenseMatrix};

/// `Γ̂` is exactly symmetric; it may be indefinite.
#[derive(Clone, Debug)]
pub struct SurrogatePair {
    pub gamma_hat: DenseMatrix,
    pub upsilon_hat: DenseMatrix,
    pub channel: CorruptionSpec,
    pub n: usize,
}

impl SurrogatePair {
    pub fn d1(&self) -> usize {
        self.gamma_hat.rows()
    }

    pub fn d2(&self) -> usize {
        self.upsilon_hat.cols()
    }
}

fn check_rows(z: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
    if z.rows() != y.rows() {
        return Err(Error::DimensionMismatch {
            op: "surrogate",
            expected: format!("{} response rows", z.rows()),
            found: format!("{}", y.rows()),
        });
    }
    Ok(())
}

/// `AᵀB / n`, computed the same way for every channel so that degenerate
/// corruption levels reproduce the clean pair bit for bit.
fn scaled_cross(a: &DMatrix<f64>, b: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    a.tr_mul(b) / n as f64
}

fn finish(gamma: DMatrix<f64>, upsilon: DMatrix<f64>, channel: CorruptionSpec, n: usize) -> SurrogatePair {
    let gamma = DenseMatrix::from_raw(gamma).symmetrized();
    SurrogatePair {
        gamma_hat: gamma,
        upsilon_hat: DenseMatrix::from_raw(upsilon),
        channel,
        n,
    }
}

/// `Γ̂ = XᵀX/n`, `Υ̂ = XᵀY/n`.
pub fn build_clean(x: &DenseMatrix, y: &DenseMatrix) -> Result<SurrogatePair> {
    check_rows(x, y)?;
    let n = x.rows();
    let (xm, ym) = (x.as_nalgebra(), y.as_nalgebra());
    Ok(finish(
        scaled_cross(xm, xm, n),
        scaled_cross(xm, ym, n),
        CorruptionSpec::Clean,
        n,
    ))
}

/// `Γ̂ = ZᵀZ/n - Σ_w`, `Υ̂ = ZᵀY/n`.
///
/// `sigma_w` in the returned channel tag is read off the mean diagonal of
/// `sigma_w_cov`.
pub fn build_additive(z: &DenseMatrix, y: &DenseMatrix, sigma_w_cov: &DenseMatrix) -> Result<SurrogatePair> {
    check_rows(z, y)?;
    let d1 = z.cols();
    if sigma_w_cov.shape() != (d1, d1) {
        return Err(shape_mismatch(
            "build_additive (sigma_w_cov)",
            (d1, d1),
            sigma_w_cov.shape(),
        ));
    }
    let n = z.rows();
    let (zm, ym) = (z.as_nalgebra(), y.as_nalgebra());
    let gamma = scaled_cross(zm, zm, n) - sigma_w_cov.as_nalgebra();
    let mean_var = sigma_w_cov.diagonal().iter().sum::<f64>() / d1 as f64;
    let channel = CorruptionSpec::Additive {
        sigma_w: mean_var.max(0.0).sqrt(),
    };
    Ok(finish(gamma, scaled_cross(zm, ym, n), channel, n))
}

/// With `Z̃ = Z / (1 - ρ)`: `Γ̂ = Z̃ᵀZ̃/n - ρ diag(Z̃ᵀZ̃/n)`, `Υ̂ = Z̃ᵀY/n`.
/// `z_masked` must be zero-filled at missing entries.
pub fn build_missing(z_masked: &DenseMatrix, y: &DenseMatrix, rho: f64) -> Result<SurrogatePair> {
    check_rho(rho)?;
    check_rows(z_masked, y)?;
    let n = z_masked.rows();
    let zt = z_masked.as_nalgebra() / (1.0 - rho);
    let ym = y.as_nalgebra();
    let mut gamma = scaled_cross(&zt, &zt, n);
    for i in 0..gamma.nrows() {
        let g = gamma[(i, i)];
        gamma[(i, i)] = g - rho * g;
    }
    Ok(finish(
        gamma,
        scaled_cross(&zt, ym, n),
        CorruptionSpec::Missing { rho },
        n,
    ))
}

/// Builds the pair matching the instance's corruption channel, with
/// `Σ_w = σ_w² I` treated as known.
pub fn build_for_instance(inst: &ProblemInstance) -> Result<SurrogatePair> {
    match inst.corruption {
        CorruptionSpec::Clean => build_clean(&inst.z, &inst.y),
        CorruptionSpec::Additive { sigma_w } => {
            let cov = &DenseMatrix::identity(inst.d1()) * (sigma_w * sigma_w);
            build_additive(&inst.z, &inst.y, &cov)
        }
        CorruptionSpec::Missing { rho } => build_missing(&inst.z, &inst.y, rho),
    }
}

/// `W0ᵀ W0 / n` from `n` independent pure-noise observations.
pub fn estimate_sigma_w(w0: &DenseMatrix) -> DenseMatrix {
    let m = w0.as_nalgebra();
    DenseMatrix::from_raw(scaled_cross(m, m, w0.rows())).symmetrized()
}

/// Smallest eigenvalue; negative values expose nonconvexity of the loss.
pub fn min_eigenvalue(gamma_hat: &DenseMatrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(gamma_hat)?[0])
}
