//! Constrained proximal gradient solver for
//! `min ½⟨Γ̂Θ, Θ⟩ - ⟨Υ̂, Θ⟩ + λ‖Θ‖_*` over the nuclear ball `‖Θ‖_* <= ω`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_mismatch, Error, Result};
use crate::linalg::{nuclear_norm, operator_norm, svd, trace_inner, DenseMatrix};
use crate::linalg::{project_factors, soft_threshold_factors};
use crate::surrogate::SurrogatePair;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Regularization weight λ.
    pub lambda: f64,
    /// Nuclear-ball radius ω.
    pub omega: f64,
    /// Inverse step size.
    pub v: f64,
    pub max_iters: usize,
    /// Relative objective-change threshold.
    pub stop_tol: f64,
    pub trace_every: usize,
}

impl SolverConfig {
    pub const DEFAULT_MAX_ITERS: usize = 2000;
    pub const DEFAULT_STOP_TOL: f64 = 1e-9;

    pub fn new(lambda: f64, omega: f64, v: f64) -> Self {
        Self {
            lambda,
            omega,
            v,
            max_iters: Self::DEFAULT_MAX_ITERS,
            stop_tol: Self::DEFAULT_STOP_TOL,
            trace_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("lambda", self.lambda),
            ("omega", self.omega),
            ("v", self.v),
            ("stop_tol", self.stop_tol),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(invalid(name, value, "must be finite and > 0"));
            }
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters", 0.0, "must be positive"));
        }
        if self.trace_every == 0 {
            return Err(invalid("trace_every", 0.0, "must be positive"));
        }
        Ok(())
    }
}

/// One logged iterate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: usize,
    pub objective: f64,
    pub nuclear_norm: f64,
    /// `‖Θᵗ - Θᵗ⁻¹‖_F`; zero at `t = 0`.
    pub step_distance: f64,
    pub dist_to_reference: Option<f64>,
    /// `‖Θᵗ - Θ_final‖_F`, filled in once the run ends.
    pub dist_to_final: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub entries: Vec<TraceEntry>,
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub theta_hat: DenseMatrix,
    pub iterations_run: usize,
    pub converged: bool,
    pub final_objective: f64,
    pub trace: SolverTrace,
    /// The supplied starting point was outside the ball and got projected.
    pub initial_projected: bool,
}

/// Which of the three update procedures produced an iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepBranch {
    /// The soft-thresholded point was already feasible.
    Unconstrained,
    /// The gradient point was projected onto the nuclear ball.
    Projected,
}

fn check_theta(pair: &SurrogatePair, theta: &DenseMatrix, op: &'static str) -> Result<()> {
    let expected = (pair.d1(), pair.d2());
    if theta.shape() != expected || pair.upsilon_hat.rows() != pair.d1() {
        return Err(shape_mismatch(op, expected, theta.shape()));
    }
    Ok(())
}

/// `½⟨Γ̂Θ, Θ⟩ - ⟨Υ̂, Θ⟩`.
pub fn loss(pair: &SurrogatePair, theta: &DenseMatrix) -> Result<f64> {
    check_theta(pair, theta, "loss")?;
    Ok(loss_unchecked(pair, theta))
}

fn loss_unchecked(pair: &SurrogatePair, theta: &DenseMatrix) -> f64 {
    let t = theta.as_nalgebra();
    let gt = pair.gamma_hat.as_nalgebra() * t;
    0.5 * gt.dot(t) - pair.upsilon_hat.as_nalgebra().dot(t)
}

/// `Ψ(Θ) = ½⟨Γ̂Θ, Θ⟩ - ⟨Υ̂, Θ⟩ + λ‖Θ‖_*`.
pub fn objective(pair: &SurrogatePair, lambda: f64, theta: &DenseMatrix) -> Result<f64> {
    let l = loss(pair, theta)?;
    Ok(l + lambda * nuclear_norm(theta)?)
}

/// `∇L(Θ) = Γ̂Θ - Υ̂`.
pub fn loss_gradient(pair: &SurrogatePair, theta: &DenseMatrix) -> Result<DenseMatrix> {
    check_theta(pair, theta, "loss_gradient")?;
    Ok(&(&pair.gamma_hat * theta) - &pair.upsilon_hat)
}

/// One constrained proximal gradient update from a feasible `Θᵗ`.
pub fn prox_step(pair: &SurrogatePair, cfg: &SolverConfig, theta_t: &DenseMatrix) -> Result<DenseMatrix> {
    cfg.validate()?;
    Ok(prox_step_detailed(pair, cfg, theta_t)?.0)
}

/// As [`prox_step`], also returning the nuclear norm of the new iterate
/// (read off its spectrum) and which branch was taken.
pub fn prox_step_detailed(
    pair: &SurrogatePair,
    cfg: &SolverConfig,
    theta_t: &DenseMatrix,
) -> Result<(DenseMatrix, f64, StepBranch)> {
    let grad = loss_gradient(pair, theta_t)?;
    let g = theta_t - &grad.scale(1.0 / cfg.v);
    let factors = svd(&g)?;
    let (candidate, norm) = soft_threshold_factors(&factors, cfg.lambda / cfg.v);
    if norm <= cfg.omega {
        return Ok((candidate, norm, StepBranch::Unconstrained));
    }
    let (projected, norm) = project_factors(&factors, cfg.omega);
    Ok((projected, norm, StepBranch::Projected))
}

/// Runs the proximal gradient iteration from `theta0`.
///
/// An infeasible `theta0` is projected onto the ball first and flagged in
/// the result. `reference`, when given, adds `‖Θᵗ - reference‖_F` to each
/// trace entry.
pub fn solve(
    pair: &SurrogatePair,
    cfg: &SolverConfig,
    theta0: &DenseMatrix,
    reference: Option<&DenseMatrix>,
) -> Result<SolverResult> {
    cfg.validate()?;
    check_theta(pair, theta0, "solve")?;
    if let Some(r) = reference {
        check_theta(pair, r, "solve (reference)")?;
    }

    let f0 = svd(theta0)?;
    let (mut theta, mut norm, initial_projected) = if f0.nuclear_norm() > cfg.omega {
        let (p, n) = project_factors(&f0, cfg.omega);
        (p, n, true)
    } else {
        (theta0.clone(), f0.nuclear_norm(), false)
    };
    let mut psi = loss_unchecked(pair, &theta) + cfg.lambda * norm;
    if !psi.is_finite() {
        return Err(Error::Diverged {
            iteration: 0,
            objective: psi,
            nuclear_norm: norm,
            last_finite_objective: f64::NAN,
        });
    }

    let dist_ref = |th: &DenseMatrix| reference.map(|r| (th - r).frobenius_norm());
    let mut entries = vec![TraceEntry {
        t: 0,
        objective: psi,
        nuclear_norm: norm,
        step_distance: 0.0,
        dist_to_reference: dist_ref(&theta),
        dist_to_final: 0.0,
    }];
    let mut logged = vec![theta.clone()];

    let mut converged = false;
    let mut t = 0;
    while t < cfg.max_iters {
        let (next, next_norm, _) = prox_step_detailed(pair, cfg, &theta)?;
        let next_psi = loss_unchecked(pair, &next) + cfg.lambda * next_norm;
        t += 1;
        if !next_psi.is_finite() {
            return Err(Error::Diverged {
                iteration: t,
                objective: next_psi,
                nuclear_norm: next_norm,
                last_finite_objective: psi,
            });
        }
        let step = (&next - &theta).frobenius_norm();
        converged = (next_psi - psi).abs() <= cfg.stop_tol * psi.abs().max(1.0);
        theta = next;
        norm = next_norm;
        psi = next_psi;

        let last = converged || t == cfg.max_iters;
        if t % cfg.trace_every == 0 || last {
            entries.push(TraceEntry {
                t,
                objective: psi,
                nuclear_norm: norm,
                step_distance: step,
                dist_to_reference: dist_ref(&theta),
                dist_to_final: 0.0,
            });
            logged.push(theta.clone());
        }
        if converged {
            break;
        }
    }

    for (e, th) in entries.iter_mut().zip(&logged) {
        e.dist_to_final = (th - &theta).frobenius_norm();
    }

    Ok(SolverResult {
        theta_hat: theta,
        iterations_run: t,
        converged,
        final_objective: psi,
        trace: SolverTrace { entries },
        initial_projected,
    })
}

/// `‖Θ̂ - Θ*‖_F / ‖Θ*‖_F`.
pub fn relative_error(theta_hat: &DenseMatrix, theta_star: &DenseMatrix) -> Result<f64> {
    if theta_hat.shape() != theta_star.shape() {
        return Err(shape_mismatch("relative_error", theta_star.shape(), theta_hat.shape()));
    }
    let denom = theta_star.frobenius_norm();
    if denom == 0.0 {
        return Err(invalid("theta_star", 0.0, "relative error needs a nonzero truth"));
    }
    Ok((theta_hat - theta_star).frobenius_norm() / denom)
}

/// Inverse step size: `2 λ_max(Σx)` when the covariate covariance is known,
/// otherwise `2 max(|λ_min(Γ̂)|, λ_max(Γ̂))` as a data-driven stand-in.
pub fn default_inverse_step(sigma_x_lambda_max: Option<f64>, pair: &SurrogatePair) -> Result<f64> {
    if let Some(lmax) = sigma_x_lambda_max {
        return Ok(2.0 * lmax);
    }
    let eig = crate::linalg::symmetric_eigenvalues(&pair.gamma_hat)?;
    let lo = eig[0];
    let hi = *eig.last().expect("nonempty spectrum");
    Ok(2.0 * lo.abs().max(hi))
}

/// Largest violation of the first-order optimality condition
/// `-∇L(Θ) ∈ λ ∂‖Θ‖_* + N_S(Θ)` at a feasible `Θ`, in gradient units.
///
/// On the boundary of the ball the normal cone is `{μ G : G ∈ ∂‖Θ‖_*, μ >= 0}`,
/// so the condition becomes `-∇L(Θ) ∈ s ∂‖Θ‖_*` for some `s >= λ`; `s` is
/// estimated from the trace of `Uᵀ(-∇L)V`.
pub fn first_order_residual(pair: &SurrogatePair, lambda: f64, omega: f64, theta: &DenseMatrix) -> Result<f64> {
    let m = -&loss_gradient(pair, theta)?;
    let f = svd(theta)?;
    let top = f.singulars.first().copied().unwrap_or(0.0);
    let rank = f.singulars.iter().filter(|&&s| s > 1e-8 * top.max(1e-300)).count();
    let on_boundary = f.nuclear_norm() >= omega - 1e-8;

    if rank == 0 {
        let op = operator_norm(&m)?;
        return Ok(if on_boundary { 0.0 } else { (op - lambda).max(0.0) });
    }

    let u = f.left.as_nalgebra().columns(0, rank).into_owned();
    let v = f.right.as_nalgebra().columns(0, rank).into_owned();
    let mm = m.as_nalgebra();
    let core = u.transpose() * mm * &v;
    let s = if on_boundary {
        (core.trace() / rank as f64).max(lambda)
    } else {
        lambda
    };

    let eye = nalgebra::DMatrix::<f64>::identity(rank, rank);
    let core_viol = (&core / s - eye).amax() * s;
    let left_perp = mm - &u * (u.transpose() * mm);
    let cross_right = (&left_perp * &v).amax();
    let cross_left = (u.transpose() * mm - (u.transpose() * mm * &v) * v.transpose()).amax();
    let rest = &left_perp - (&left_perp * &v) * v.transpose();
    let rest_op = operator_norm(&DenseMatrix::from_raw(rest))?;
    let rest_viol = (rest_op - s).max(0.0);
    Ok(core_viol.max(cross_right).max(cross_left).max(rest_viol))
}

/// `true` when every traced nuclear norm respects the radius.
pub fn trace_is_feasible(trace: &SolverTrace, omega: f64, slack: f64) -> bool {
    trace.entries.iter().all(|e| e.nuclear_norm <= omega + slack)
}

/// `⟨Γ̂Δ, Δ⟩` for a `d1 x d2` direction.
pub fn quadratic_form(gamma: &DenseMatrix, delta: &DenseMatrix) -> Result<f64> {
    if gamma.cols() != delta.rows() {
        return Err(shape_mismatch(
            "quadratic_form",
            (gamma.cols(), delta.cols()),
            delta.shape(),
        ));
    }
    trace_inner(&(gamma * delta), delta)
}
