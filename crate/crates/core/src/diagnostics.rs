//! Checkable numbers for the theory: deviation statistic, RSC/RSM probes,
//! effective rank, recovery bounds, contraction constants and the
//! channel-specific constants.

use serde::{Deserialize, Serialize};

use crate::data::{CovarianceSpec, GroundTruth};
use crate::error::{invalid, shape_mismatch, Result};
use crate::linalg::{
    lambda_max, lambda_min, nuclear_norm, operator_norm, project_subspace_b, svd, top_singular_frames, DenseMatrix,
};
use crate::rng::{mix64, stream_rng, STREAM_PROBE};
use crate::solver::{quadratic_form, SolverConfig, TraceEntry};
use crate::surrogate::SurrogatePair;

/// `‖Υ̂ - Γ̂Θ*‖_op`.
pub fn deviation_statistic(pair: &SurrogatePair, theta_star: &DenseMatrix) -> Result<f64> {
    if theta_star.shape() != (pair.d1(), pair.d2()) {
        return Err(shape_mismatch(
            "deviation_statistic",
            (pair.d1(), pair.d2()),
            theta_star.shape(),
        ));
    }
    let resid = &pair.upsilon_hat - &(&pair.gamma_hat * theta_star);
    operator_norm(&resid)
}

pub const DEFAULT_PROBE_SAMPLES: usize = 500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RscProbeReport {
    pub r: usize,
    pub num_samples: usize,
    /// `max |⟨(Γ̂ - Σx)Δ, Δ⟩|` over the sampled unit-Frobenius directions.
    /// A lower bound on the supremum over the whole rank-2r set.
    pub max_quadratic_deviation: f64,
    /// Intercept and slope of the tightest least-squares lower envelope
    /// `⟨Γ̂Δ, Δ⟩ >= α - τ‖Δ‖²_*` over the samples.
    pub fitted_alpha1: f64,
    pub fitted_tau: f64,
    /// `λ_min(Σx) / 2`.
    pub anchor_alpha1: f64,
    /// Smallest `τ >= 0` making the envelope hold with `α = anchor_alpha1`.
    pub anchor_tau: f64,
    /// `max_quadratic_deviation <= λ_min(Σx) / 24`.
    pub deviation_trigger: bool,
    pub min_quadratic: f64,
    pub max_quadratic: f64,
}

/// Probe direction `i`: a normalized product of Gaussian `d1 x k` and
/// `d2 x k` factors with `k = min(2r, d1, d2)`.
pub fn sample_probe_direction(d1: usize, d2: usize, r: usize, seed: u64, i: usize) -> DenseMatrix {
    let k = (2 * r).min(d1).min(d2).max(1);
    let mut rng = stream_rng(mix64(seed, i as u64, STREAM_PROBE), STREAM_PROBE);
    let a = crate::data::gaussian_matrix(&mut rng, d1, k);
    let b = crate::data::gaussian_matrix(&mut rng, d2, k);
    let m = a.as_nalgebra() * b.as_nalgebra().transpose();
    let f = m.norm();
    DenseMatrix::from_raw(m / f)
}

pub fn rsc_rsm_probe(
    gamma_hat: &DenseMatrix,
    sigma_x: &DenseMatrix,
    d2: usize,
    r: usize,
    num_samples: usize,
    seed: u64,
) -> Result<RscProbeReport> {
    if r == 0 {
        return Err(invalid("r", 0.0, "probe rank must be >= 1"));
    }
    if num_samples == 0 {
        return Err(invalid("num_samples", 0.0, "must be >= 1"));
    }
    if d2 == 0 {
        return Err(invalid("d2", 0.0, "must be >= 1"));
    }
    let d1 = gamma_hat.rows();
    if gamma_hat.shape() != (d1, d1) || sigma_x.shape() != (d1, d1) {
        return Err(shape_mismatch("rsc_rsm_probe", (d1, d1), sigma_x.shape()));
    }
    let lmin = lambda_min(sigma_x)?;
    let diff = gamma_hat - sigma_x;

    let mut max_dev = 0.0_f64;
    let mut xs = Vec::with_capacity(num_samples);
    let mut qs = Vec::with_capacity(num_samples);
    for i in 0..num_samples {
        let delta = sample_probe_direction(d1, d2, r, seed, i);
        max_dev = max_dev.max(quadratic_form(&diff, &delta)?.abs());
        qs.push(quadratic_form(gamma_hat, &delta)?);
        xs.push(nuclear_norm(&delta)?.powi(2));
    }
    let (fitted_alpha1, fitted_tau) = lower_envelope_fit(&xs, &qs);
    let anchor_alpha1 = lmin / 2.0;
    let anchor_tau = xs
        .iter()
        .zip(&qs)
        .map(|(x, q)| (anchor_alpha1 - q) / x)
        .fold(0.0_f64, f64::max);

    Ok(RscProbeReport {
        r,
        num_samples,
        max_quadratic_deviation: max_dev,
        fitted_alpha1,
        fitted_tau,
        anchor_alpha1,
        anchor_tau,
        deviation_trigger: max_dev <= lmin / 24.0,
        min_quadratic: qs.iter().copied().fold(f64::INFINITY, f64::min),
        max_quadratic: qs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Least squares for `q_i ≈ α - τ x_i` subject to `q_i >= α - τ x_i` for all
/// `i` and `τ >= 0`. At the optimum at least one constraint is active, so the
/// candidates are: lines through a single sample with the best slope,
/// edges of the lower convex hull, and the horizontal line at `min q`.
pub fn lower_envelope_fit(xs: &[f64], qs: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), qs.len());
    assert!(!xs.is_empty());
    let scale = qs.iter().fold(1.0_f64, |m, q| m.max(q.abs()));
    let slack = 1e-12 * scale;
    let feasible = |alpha: f64, tau: f64| tau >= 0.0 && xs.iter().zip(qs).all(|(x, q)| *q >= alpha - tau * x - slack);
    let sse = |alpha: f64, tau: f64| {
        xs.iter()
            .zip(qs)
            .map(|(x, q)| (q - alpha + tau * x).powi(2))
            .sum::<f64>()
    };

    let qmin = qs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut best = (qmin, 0.0, sse(qmin, 0.0));
    let mut consider = |alpha: f64, tau: f64| {
        if alpha.is_finite() && tau.is_finite() && feasible(alpha, tau) {
            let s = sse(alpha, tau);
            if s < best.2 {
                best = (alpha, tau, s);
            }
        }
    };

    for j in 0..xs.len() {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..xs.len() {
            let dx = xs[i] - xs[j];
            num += (qs[i] - qs[j]) * dx;
            den += dx * dx;
        }
        if den > 0.0 {
            let tau = (-num / den).max(0.0);
            consider(qs[j] + tau * xs[j], tau);
        }
    }

    let mut pts: Vec<(f64, f64)> = xs.iter().copied().zip(qs.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.0 > a.0 {
            let tau = -(b.1 - a.1) / (b.0 - a.0);
            consider(a.1 + tau * a.0, tau);
        }
    }
    (best.0, best.1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRank {
    pub cardinality: usize,
    pub tail_nuclear: f64,
}

impl EffectiveRank {
    /// `(|K_η| <= η^(-q) Rq, tail <= η^(1-q) Rq)`.
    pub fn certificate(&self, eta: f64, q: f64, rq: f64) -> (bool, bool) {
        let card_ok = self.cardinality as f64 <= eta.powf(-q) * rq;
        let tail_ok = self.tail_nuclear <= eta.powf(1.0 - q) * rq;
        (card_ok, tail_ok)
    }
}

pub fn effective_rank(theta_star: &DenseMatrix, eta: f64) -> Result<EffectiveRank> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(invalid("eta", eta, "must be finite and > 0"));
    }
    let s = svd(theta_star)?.singulars;
    Ok(EffectiveRank {
        cardinality: s.iter().filter(|&&v| v > eta).count(),
        tail_nuclear: s.iter().filter(|&&v| v <= eta).sum(),
    })
}

pub const L2_BOUND_CONSTANT: f64 = 544.0;

pub fn nuclear_bound_constant() -> f64 {
    4.0 + 32.0 * 17f64.sqrt()
}

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("q", q, "must lie in [0, 1]"));
    }
    Ok(())
}

/// Returns `(544 Rq (λ/α₁)^(2-q), (4 + 32√17) Rq (λ/α₁)^(1-q))`.
pub fn recovery_bound_rhs(q: f64, rq: f64, lambda: f64, alpha1: f64) -> Result<(f64, f64)> {
    check_q(q)?;
    if !(alpha1 > 0.0) {
        return Err(invalid("alpha1", alpha1, "must be > 0"));
    }
    if !(rq >= 0.0) {
        return Err(invalid("rq", rq, "must be >= 0"));
    }
    let ratio = lambda / alpha1;
    Ok((
        L2_BOUND_CONSTANT * rq * ratio.powf(2.0 - q),
        nuclear_bound_constant() * rq * ratio.powf(1.0 - q),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionConstants {
    pub epsilon_stat_bar: f64,
    pub kappa: f64,
    pub xi: f64,
    /// `1 - 256 τ λ^(-q/2) Rq / α₁`.
    pub denominator: f64,
    /// Denominator positive and `κ ∈ (0, 1)`.
    pub valid: bool,
}

impl ContractionConstants {
    /// Iteration count after which the objective gap is below `delta_star`.
    /// `None` unless the constants are valid and `ωλ/δ* > 2` (so the double
    /// logarithm is positive).
    pub fn t_delta_star(&self, delta_star: f64, omega: f64, lambda: f64, initial_gap: f64) -> Option<f64> {
        if !self.valid || !(delta_star > 0.0) {
            return None;
        }
        let inner = (omega * lambda / delta_star).log2();
        if !(inner > 1.0) {
            return None;
        }
        let log_inv_kappa = (1.0 / self.kappa).ln();
        let epochs = inner.log2() * (1.0 + std::f64::consts::LN_2 / log_inv_kappa);
        let gap_term = (initial_gap.max(delta_star) / delta_star).ln() / log_inv_kappa;
        Some(epochs + gap_term)
    }

    /// Smallest admissible tolerance `8 ξ ε̄² / (1 - κ)`.
    pub fn min_tolerance(&self) -> f64 {
        8.0 * self.xi * self.epsilon_stat_bar.powi(2) / (1.0 - self.kappa)
    }
}

pub fn contraction_constants(
    tau: f64,
    lambda: f64,
    q: f64,
    rq: f64,
    alpha1: f64,
    v: f64,
    stat_error_f: f64,
) -> Result<ContractionConstants> {
    check_q(q)?;
    for (name, value) in [("lambda", lambda), ("alpha1", alpha1), ("v", v)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(invalid(name, value, "must be finite and > 0"));
        }
    }
    for (name, value) in [("tau", tau), ("rq", rq), ("stat_error_f", stat_error_f)] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(invalid(name, value, "must be finite and >= 0"));
        }
    }
    let sqrt_rq = rq.sqrt();
    let epsilon_stat_bar =
        8.0 * lambda.powf(-q / 2.0) * sqrt_rq * (2f64.sqrt() * stat_error_f + lambda.powf(1.0 - q / 2.0) * sqrt_rq);
    let denominator = 1.0 - 256.0 * tau * lambda.powf(-q / 2.0) * rq / alpha1;
    let kappa = (1.0 - alpha1 / (8.0 * v) + 256.0 * tau * lambda.powf(-q) * rq / alpha1) / denominator;
    let xi = tau * (alpha1 / (8.0 * v) + 512.0 * tau * lambda.powf(q / 2.0) * rq / alpha1 + 5.0) / denominator;
    let valid = denominator > 0.0 && kappa > 0.0 && kappa < 1.0;
    Ok(ContractionConstants {
        epsilon_stat_bar,
        kappa,
        xi,
        denominator,
        valid,
    })
}

/// `λ_min max(d2² s² / λ_min², d2 s / λ_min) (2 max(d1, d2) + ln min(d1, d2)) / n`,
/// the common shape of every channel's tolerance.
fn tau_formula(lmin: f64, s: f64, d1: usize, d2: usize, n: usize) -> f64 {
    let d2f = d2 as f64;
    let quad = d2f * d2f * s * s / (lmin * lmin);
    let lin = d2f * s / lmin;
    let dims = 2.0 * d1.max(d2) as f64 + (d1.min(d2) as f64).ln();
    lmin * quad.max(lin) * dims / n as f64
}

fn check_channel_inputs(n: usize, d1: usize, d2: usize, sigma_x: &DenseMatrix) -> Result<()> {
    if n == 0 {
        return Err(invalid("n", 0.0, "must be >= 1"));
    }
    if d1 == 0 || d2 == 0 {
        return Err(invalid("d", 0.0, "dimensions must be >= 1"));
    }
    if sigma_x.shape() != (d1, d1) {
        return Err(shape_mismatch("channel constants", (d1, d1), sigma_x.shape()));
    }
    Ok(())
}

/// Tolerance for uncorrupted covariates, with `s = ‖Σx‖²_op`.
pub fn tau_clean(sigma_x: &DenseMatrix, n: usize, d1: usize, d2: usize) -> Result<f64> {
    check_channel_inputs(n, d1, d2, sigma_x)?;
    let op = operator_norm(sigma_x)?;
    Ok(tau_formula(lambda_min(sigma_x)?, op * op, d1, d2, n))
}

/// `(τ_add, φ_add)` for isotropic additive noise of level `sigma_w`.
pub fn channel_constants_additive(
    sigma_x: &DenseMatrix,
    sigma_w: f64,
    sigma_eps: f64,
    omega: f64,
    n: usize,
    d1: usize,
    d2: usize,
) -> Result<(f64, f64)> {
    check_channel_inputs(n, d1, d2, sigma_x)?;
    let op = operator_norm(sigma_x)?;
    let sz2 = op * op + sigma_w * sigma_w;
    let tau = tau_formula(lambda_min(sigma_x)?, sz2, d1, d2, n);
    let sigma_z = DenseMatrix::from_fn(d1, d1, |i, j| {
        sigma_x.get(i, j) + if i == j { sigma_w * sigma_w } else { 0.0 }
    })?;
    let phi = lambda_max(&sigma_z)?.sqrt() * (sigma_eps + omega * sigma_w);
    Ok((tau, phi))
}

/// `Σx ∘ M` with `M` equal to `(1-ρ)²` off the diagonal and `1-ρ` on it.
pub fn missing_sigma_z(sigma_x: &DenseMatrix, rho: f64) -> Result<DenseMatrix> {
    crate::data::check_rho(rho)?;
    let keep = 1.0 - rho;
    DenseMatrix::from_fn(sigma_x.rows(), sigma_x.cols(), |i, j| {
        sigma_x.get(i, j) * if i == j { keep } else { keep * keep }
    })
}

/// `(τ_mis, φ_mis)` for entries missing independently with probability `rho`.
pub fn channel_constants_missing(
    sigma_x: &DenseMatrix,
    rho: f64,
    sigma_eps: f64,
    omega: f64,
    n: usize,
    d1: usize,
    d2: usize,
) -> Result<(f64, f64)> {
    check_channel_inputs(n, d1, d2, sigma_x)?;
    crate::data::check_rho(rho)?;
    let keep = 1.0 - rho;
    let op = operator_norm(sigma_x)?;
    let s = op * op / (keep * keep);
    let tau = tau_formula(lambda_min(sigma_x)?, s, d1, d2, n);
    let sigma_z = missing_sigma_z(sigma_x, rho)?;
    let phi = lambda_max(&sigma_z)?.sqrt() / keep * (omega / keep * op + sigma_eps);
    Ok((tau, phi))
}

/// Splits `Δ` into `Δ' + Δ''` with `Δ''` the projection onto the
/// complement subspace of the top-`r` frames of `Θ*`.
pub fn decompose_error(delta: &DenseMatrix, theta_star: &DenseMatrix, r: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    if delta.shape() != theta_star.shape() {
        return Err(shape_mismatch("decompose_error", theta_star.shape(), delta.shape()));
    }
    let (ur, vr) = top_singular_frames(theta_star, r)?;
    let dpp = project_subspace_b(delta, &ur, &vr)?;
    let dp = delta - &dpp;
    Ok((dp, dpp))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryBoundCheck {
    pub lambda: f64,
    pub alpha1: f64,
    pub frobenius_sq_measured: f64,
    pub frobenius_sq_bound: f64,
    pub frobenius_ratio: f64,
    pub frobenius_holds: bool,
    pub nuclear_measured: f64,
    pub nuclear_bound: f64,
    pub nuclear_ratio: f64,
    pub nuclear_holds: bool,
}

impl RecoveryBoundCheck {
    pub fn holds(&self) -> bool {
        self.frobenius_holds && self.nuclear_holds
    }
}

fn ratio(measured: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        measured / bound
    } else if measured == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Compares `‖Θ̂ - Θ*‖²_F` and `‖Θ̂ - Θ*‖_*` against the recovery bounds at
/// the given `(λ, α₁)`.
pub fn recovery_bound_check(
    truth: &GroundTruth,
    theta_hat: &DenseMatrix,
    lambda: f64,
    alpha1: f64,
) -> Result<RecoveryBoundCheck> {
    let (q, rq) = truth.kind.ball();
    if theta_hat.shape() != truth.theta_star.shape() {
        return Err(shape_mismatch(
            "recovery_bound_check",
            truth.theta_star.shape(),
            theta_hat.shape(),
        ));
    }
    let (fb, nb) = recovery_bound_rhs(q, rq, lambda, alpha1)?;
    let err = theta_hat - &truth.theta_star;
    let fm = err.frobenius_norm().powi(2);
    let nm = nuclear_norm(&err)?;
    Ok(RecoveryBoundCheck {
        lambda,
        alpha1,
        frobenius_sq_measured: fm,
        frobenius_sq_bound: fb,
        frobenius_ratio: ratio(fm, fb),
        frobenius_holds: fm <= fb,
        nuclear_measured: nm,
        nuclear_bound: nb,
        nuclear_ratio: ratio(nm, nb),
        nuclear_holds: nm <= nb,
    })
}

/// As [`recovery_bound_check`] with `α₁` taken from the probe anchor.
pub fn recovery_bound_check_with_probe(
    truth: &GroundTruth,
    theta_hat: &DenseMatrix,
    lambda: f64,
    probe: &RscProbeReport,
) -> Result<RecoveryBoundCheck> {
    recovery_bound_check(truth, theta_hat, lambda, probe.anchor_alpha1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ intercept + slope x`. `None` with fewer than
/// two distinct `x` values.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        points: n,
    })
}

/// Fits `ln ‖Θᵗ - Θ_final‖_F` against `t` over the leading run of trace
/// entries whose distance stays above `floor_factor` times the final floor
/// (the smallest positive distance in the trace).
pub fn geometric_decay_fit(entries: &[TraceEntry], floor_factor: f64) -> Option<LinearFit> {
    let floor = entries
        .iter()
        .map(|e| e.dist_to_final)
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return None;
    }
    let cut = floor_factor * floor;
    let seg: Vec<&TraceEntry> = entries.iter().take_while(|e| e.dist_to_final > cut).collect();
    let xs: Vec<f64> = seg.iter().map(|e| e.t as f64).collect();
    let ys: Vec<f64> = seg.iter().map(|e| e.dist_to_final.ln()).collect();
    fit_line(&xs, &ys)
}

/// Every diagnostic for one solved instance, as emitted by `diagnose`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoryReport {
    pub d1: usize,
    pub d2: usize,
    pub n: usize,
    pub channel: String,
    pub q: f64,
    pub rq: f64,
    pub lambda: f64,
    pub omega: f64,
    pub v: f64,
    pub deviation_statistic: f64,
    pub tau_channel: f64,
    pub phi_channel: f64,
    pub probe: RscProbeReport,
    pub contraction: ContractionConstants,
    pub contraction_at_probe_tau: ContractionConstants,
    pub t_delta_star: Option<f64>,
    pub delta_star: f64,
    pub recovery_bound_frobenius_sq: f64,
    pub recovery_bound_nuclear: f64,
    pub recovery_check: RecoveryBoundCheck,
    pub effective_rank: EffectiveRank,
    pub effective_rank_eta: f64,
    pub min_eigenvalue_gamma_hat: f64,
    pub relative_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub decay_fit: Option<LinearFit>,
}

/// Inputs to [`theory_report`] beyond the instance itself.
pub struct ReportInputs<'a> {
    pub pair: &'a SurrogatePair,
    pub sigma_x: &'a CovarianceSpec,
    pub sigma_w: f64,
    pub cfg: &'a SolverConfig,
    pub theta_hat: &'a DenseMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub trace: &'a [TraceEntry],
    pub probe_samples: usize,
    pub seed: u64,
}

pub fn theory_report(inst: &crate::data::ProblemInstance, inp: &ReportInputs<'_>) -> Result<TheoryReport> {
    use crate::data::CorruptionSpec;
    let (d1, d2, n) = (inst.d1(), inst.d2(), inst.n);
    let truth = &inst.ground_truth;
    let theta_star = &truth.theta_star;
    let (q, rq) = truth.kind.ball();
    let sx = inp.sigma_x.matrix(d1);
    let cfg = inp.cfg;

    let (tau_channel, phi_channel) = match inst.corruption {
        CorruptionSpec::Clean => channel_constants_additive(&sx, 0.0, inst.sigma_eps, cfg.omega, n, d1, d2)?,
        CorruptionSpec::Additive { .. } => {
            channel_constants_additive(&sx, inp.sigma_w, inst.sigma_eps, cfg.omega, n, d1, d2)?
        }
        CorruptionSpec::Missing { rho } => channel_constants_missing(&sx, rho, inst.sigma_eps, cfg.omega, n, d1, d2)?,
    };
    let probe_rank = match truth.kind {
        crate::data::TruthKind::ExactRank { r } => r,
        crate::data::TruthKind::LqBall { .. } => effective_rank(theta_star, cfg.lambda)?.cardinality.max(1),
    };
    let probe = rsc_rsm_probe(&inp.pair.gamma_hat, &sx, d2, probe_rank, inp.probe_samples, inp.seed)?;
    let alpha1 = probe.anchor_alpha1;
    let stat = (inp.theta_hat - theta_star).frobenius_norm();
    let contraction = contraction_constants(tau_channel, cfg.lambda, q, rq, alpha1, cfg.v, stat)?;
    let contraction_at_probe_tau = contraction_constants(probe.anchor_tau, cfg.lambda, q, rq, alpha1, cfg.v, stat)?;

    let delta_star = contraction_at_probe_tau.min_tolerance().max(1e-12);
    let psi0 = crate::solver::objective(inp.pair, cfg.lambda, &DenseMatrix::zeros(d1, d2))?;
    let psi_hat = crate::solver::objective(inp.pair, cfg.lambda, inp.theta_hat)?;
    let t_delta_star = contraction_at_probe_tau.t_delta_star(delta_star, cfg.omega, cfg.lambda, psi0 - psi_hat);

    let (fb, nb) = recovery_bound_rhs(q, rq, cfg.lambda, alpha1)?;
    let recovery_check = recovery_bound_check(truth, inp.theta_hat, cfg.lambda, alpha1)?;
    let eta = cfg.lambda;

    Ok(TheoryReport {
        d1,
        d2,
        n,
        channel: inst.corruption.name().to_string(),
        q,
        rq,
        lambda: cfg.lambda,
        omega: cfg.omega,
        v: cfg.v,
        deviation_statistic: deviation_statistic(inp.pair, theta_star)?,
        tau_channel,
        phi_channel,
        probe,
        contraction,
        contraction_at_probe_tau,
        t_delta_star,
        delta_star,
        recovery_bound_frobenius_sq: fb,
        recovery_bound_nuclear: nb,
        recovery_check,
        effective_rank: effective_rank(theta_star, eta)?,
        effective_rank_eta: eta,
        min_eigenvalue_gamma_hat: crate::surrogate::min_eigenvalue(&inp.pair.gamma_hat)?,
        relative_error: crate::solver::relative_error(inp.theta_hat, theta_star)?,
        iterations: inp.iterations,
        converged: inp.converged,
        decay_fit: geometric_decay_fit(inp.trace, 10.0),
    })
}
