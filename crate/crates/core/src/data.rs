//! Ground-truth parameters, Gaussian designs and the two covariate
//! corruption channels (additive noise, entries missing at random).

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky_lower, lambda_max, lambda_min, svd, DenseMatrix, RANK_TOL};
use crate::rng::{stream_rng, Rng, STREAM_CORRUPTION, STREAM_COVARIATES, STREAM_NOISE, STREAM_TRUTH};

/// Which low-rank class the truth was drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthKind {
    ExactRank { r: usize },
    LqBall { q: f64, radius: f64 },
}

impl TruthKind {
    /// `(q, R_q)`; exact rank `r` is the `q = 0` ball of radius `r`.
    pub fn ball(&self) -> (f64, f64) {
        match *self {
            TruthKind::ExactRank { r } => (0.0, r as f64),
            TruthKind::LqBall { q, radius } => (q, radius),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub theta_star: DenseMatrix,
    pub kind: TruthKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "channel", rename_all = "snake_case")]
pub enum CorruptionSpec {
    Clean,
    Additive { sigma_w: f64 },
    Missing { rho: f64 },
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CorruptionSpec::Clean => Ok(()),
            CorruptionSpec::Additive { sigma_w } => {
                if sigma_w >= 0.0 && sigma_w.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("sigma_w", sigma_w, "must be finite and >= 0"))
                }
            }
            CorruptionSpec::Missing { rho } => check_rho(rho),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CorruptionSpec::Clean => "clean",
            CorruptionSpec::Additive { .. } => "additive",
            CorruptionSpec::Missing { .. } => "missing",
        }
    }

    /// Tag folded into replication seeds.
    pub fn tag(&self) -> u64 {
        match self {
            CorruptionSpec::Clean => 0,
            CorruptionSpec::Additive { .. } => 1,
            CorruptionSpec::Missing { .. } => 2,
        }
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(invalid("rho", rho, "must lie in [0, 1)"))
    }
}

/// Covariance of the true covariate rows.
#[derive(Clone, Debug)]
pub enum CovarianceSpec {
    /// `scale * I`.
    Identity { scale: f64 },
    /// Full symmetric positive definite matrix.
    Full(DenseMatrix),
}

impl Default for CovarianceSpec {
    fn default() -> Self {
        CovarianceSpec::Identity { scale: 1.0 }
    }
}

impl CovarianceSpec {
    pub fn matrix(&self, dim: usize) -> DenseMatrix {
        match self {
            CovarianceSpec::Identity { scale } => &DenseMatrix::identity(dim) * *scale,
            CovarianceSpec::Full(m) => m.clone(),
        }
    }

    pub fn lambda_min(&self) -> Result<f64> {
        match self {
            CovarianceSpec::Identity { scale } => Ok(*scale),
            CovarianceSpec::Full(m) => lambda_min(m),
        }
    }

    pub fn lambda_max(&self) -> Result<f64> {
        match self {
            CovarianceSpec::Identity { scale } => Ok(*scale),
            CovarianceSpec::Full(m) => lambda_max(m),
        }
    }
}

/// Row-major missingness mask; `true` marks an unobserved entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MissingMask {
    pub rows: usize,
    pub cols: usize,
    pub missing: Vec<bool>,
}

impl MissingMask {
    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.missing[i * self.cols + j]
    }

    pub fn count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }
}

/// One simulated data set: truth, clean covariates, observed covariates and
/// responses, plus everything needed to regenerate it.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub ground_truth: GroundTruth,
    pub n: usize,
    pub sigma_x: CovarianceSpec,
    pub sigma_eps: f64,
    pub corruption: CorruptionSpec,
    /// Clean covariates; kept for diagnostics only.
    pub x: DenseMatrix,
    /// Observed covariates (zero-filled where missing).
    pub z: DenseMatrix,
    pub mask: Option<MissingMask>,
    pub y: DenseMatrix,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn d1(&self) -> usize {
        self.x.cols()
    }

    pub fn d2(&self) -> usize {
        self.y.cols()
    }

    pub fn sigma_x_matrix(&self) -> DenseMatrix {
        self.sigma_x.matrix(self.d1())
    }

    /// Regenerates the response noise `ε` from the instance seed.
    pub fn regenerate_noise(&self) -> DenseMatrix {
        let mut rng = stream_rng(self.seed, STREAM_NOISE);
        &gaussian_matrix(&mut rng, self.n, self.d2()) * self.sigma_eps
    }
}

/// `rows x cols` matrix of standard normals, filled row by row.
pub(crate) fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> DenseMatrix {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    DenseMatrix::from_raw(m)
}

/// `Θ* = A Bᵀ` with `A (d1 x r)`, `B (d2 x r)` i.i.d. `N(0, 1) * scale`.
pub fn gen_ground_truth_exact(d1: usize, d2: usize, r: usize, scale: f64, seed: u64) -> Result<GroundTruth> {
    if d1 == 0 || d2 == 0 {
        return Err(invalid("d", 0.0, "dimensions must be positive"));
    }
    if r == 0 || r > d1.min(d2) {
        return Err(invalid("r", r as f64, "must lie in 1..=min(d1, d2)"));
    }
    if !scale.is_finite() {
        return Err(invalid("scale", scale, "must be finite"));
    }
    let mut rng = stream_rng(seed, STREAM_TRUTH);
    let a = &gaussian_matrix(&mut rng, d1, r) * scale;
    let b = &gaussian_matrix(&mut rng, d2, r) * scale;
    Ok(GroundTruth {
        theta_star: &a * &b.transpose(),
        kind: TruthKind::ExactRank { r },
    })
}

/// Near-low-rank truth with geometric spectrum `σ_i = c * decay^(-i)` and
/// Haar-random singular frames, scaled so that `Σ σ_i^q = 0.95 R_q`.
pub fn gen_ground_truth_lq(d1: usize, d2: usize, q: f64, radius: f64, decay: f64, seed: u64) -> Result<GroundTruth> {
    if d1 == 0 || d2 == 0 {
        return Err(invalid("d", 0.0, "dimensions must be positive"));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(invalid("q", q, "must lie in (0, 1]"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(invalid("rq", radius, "must be finite and > 0"));
    }
    if !(decay > 1.0) || !decay.is_finite() {
        return Err(invalid("decay", decay, "must be finite and > 1"));
    }
    let k = d1.min(d2);
    let base: Vec<f64> = (1..=k).map(|i| decay.powf(-(i as f64))).collect();
    let mass: f64 = base.iter().map(|b| b.powf(q)).sum();
    let c = (0.95 * radius / mass).powf(1.0 / q);
    let spectrum: Vec<f64> = base.iter().map(|b| c * b).collect();
    if !c.is_finite() || !mass.is_normal() || !spectrum[0].is_normal() {
        return Err(Error::InfeasibleSpectrum(
            "leading singular value underflows or overflows",
        ));
    }

    let mut rng = stream_rng(seed, STREAM_TRUTH);
    let u = random_orthonormal(&mut rng, d1, k);
    let v = random_orthonormal(&mut rng, d2, k);
    let mut us = u;
    for (j, s) in spectrum.iter().enumerate() {
        us.column_mut(j).scale_mut(*s);
    }
    Ok(GroundTruth {
        theta_star: DenseMatrix::from_raw(us * v.transpose()),
        kind: TruthKind::LqBall { q, radius },
    })
}

/// Haar-distributed `rows x k` frame from the QR factorization of a
/// Gaussian matrix, with signs fixed by the diagonal of R.
fn random_orthonormal(rng: &mut Rng, rows: usize, k: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, rows, k).into_nalgebra();
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Membership in `{Θ : Σ σ_i^q <= R_q}`; for `q = 0`, rank (count of
/// singular values above 1e-8) at most `R_q`.
pub fn lq_ball_membership(theta: &DenseMatrix, q: f64, radius: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("q", q, "must lie in [0, 1]"));
    }
    let f = svd(theta)?;
    if q == 0.0 {
        return Ok(f.rank(RANK_TOL) as f64 <= radius);
    }
    let mass: f64 = f.singulars.iter().map(|s| s.powf(q)).sum();
    Ok(mass <= radius)
}

/// Draws `X`, `ε`, `Y = X Θ* + ε` and the observed `Z` for one replication.
pub fn gen_dataset(
    gt: &GroundTruth,
    n: usize,
    sigma_x: &CovarianceSpec,
    sigma_eps: f64,
    corruption: CorruptionSpec,
    seed: u64,
) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(invalid("n", 0.0, "sample size must be positive"));
    }
    if !(sigma_eps >= 0.0) || !sigma_eps.is_finite() {
        return Err(invalid("sigma_eps", sigma_eps, "must be finite and >= 0"));
    }
    corruption.validate()?;
    let (d1, d2) = gt.theta_star.shape();

    let mut rng = stream_rng(seed, STREAM_COVARIATES);
    let g = gaussian_matrix(&mut rng, n, d1);
    let x = match sigma_x {
        CovarianceSpec::Identity { scale } => {
            if !(*scale > 0.0) || !scale.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            &g * scale.sqrt()
        }
        CovarianceSpec::Full(cov) => {
            if cov.shape() != (d1, d1) {
                return Err(crate::error::shape_mismatch("sigma_x", (d1, d1), cov.shape()));
            }
            let l = cholesky_lower(cov)?;
            &g * &l.transpose()
        }
    };

    let mut noise_rng = stream_rng(seed, STREAM_NOISE);
    let eps = &gaussian_matrix(&mut noise_rng, n, d2) * sigma_eps;
    let y = &(&x * &gt.theta_star) + &eps;

    let (z, mask) = match corruption {
        CorruptionSpec::Clean => (x.clone(), None),
        CorruptionSpec::Additive { sigma_w } => (apply_additive(&x, sigma_w, seed)?, None),
        CorruptionSpec::Missing { rho } => {
            let (z, mask) = apply_missing(&x, rho, seed)?;
            (z, Some(mask))
        }
    };

    Ok(ProblemInstance {
        ground_truth: gt.clone(),
        n,
        sigma_x: sigma_x.clone(),
        sigma_eps,
        corruption,
        x,
        z,
        mask,
        y,
        seed,
    })
}

/// `Z = X + W` with `W` i.i.d. `N(0, sigma_w²)`.
pub fn apply_additive(x: &DenseMatrix, sigma_w: f64, seed: u64) -> Result<DenseMatrix> {
    if !(sigma_w >= 0.0) || !sigma_w.is_finite() {
        return Err(invalid("sigma_w", sigma_w, "must be finite and >= 0"));
    }
    if sigma_w == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = stream_rng(seed, STREAM_CORRUPTION);
    let w = gaussian_matrix(&mut rng, x.rows(), x.cols());
    Ok(&w.scale(sigma_w) + x)
}

/// Marks each entry missing independently with probability `rho`; missing
/// entries are zero-filled.
pub fn apply_missing(x: &DenseMatrix, rho: f64, seed: u64) -> Result<(DenseMatrix, MissingMask)> {
    check_rho(rho)?;
    let (rows, cols) = x.shape();
    let mut rng = stream_rng(seed, STREAM_CORRUPTION);
    let mut z = x.clone().into_nalgebra();
    let mut missing = vec![false; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let u: f64 = rng.random();
            if u < rho {
                missing[i * cols + j] = true;
                z[(i, j)] = 0.0;
            }
        }
    }
    Ok((DenseMatrix::from_raw(z), MissingMask { rows, cols, missing }))
}
