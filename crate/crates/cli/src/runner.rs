//! Seeded replication sweeps over (d, n) grids.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;

use eiv_core::diagnostics::{deviation_statistic, recovery_bound_check, RecoveryBoundCheck};
use eiv_core::linalg::{nuclear_norm, DenseMatrix};
use eiv_core::rng::mix64;
use eiv_core::solver::{default_inverse_step, relative_error, solve, SolverConfig, TraceEntry};
use eiv_core::{
    build_for_instance, gen_dataset, gen_ground_truth_exact, gen_ground_truth_lq, CorruptionSpec, CovarianceSpec,
    GroundTruth, ProblemInstance, SurrogatePair,
};

use crate::config::{Channel, ExperimentConfig, LambdaRule, OmegaRule, PresetKind, TruthRule, VRule};
use crate::records::{write_results, write_summary, write_traces, ResultRecord, SummaryRecord, TraceRecord};

/// Spectral decay used for ℓq-ball truths.
pub const LQ_DECAY: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub d1: usize,
    pub d2: usize,
    pub n: usize,
}

/// Everything one replication produced beyond its CSV row.
#[derive(Clone, Debug)]
pub struct RunDetail {
    pub record: ResultRecord,
    pub trace: Vec<TraceEntry>,
    /// Largest `‖Θᵗ‖_* - ω` over the traced iterates.
    pub max_feasibility_excess: f64,
    /// Largest `Ψ(Θᵗ⁺¹) - Ψ(Θᵗ)` between consecutive traced iterates.
    pub max_objective_increase: f64,
    pub recovery_check: Option<RecoveryBoundCheck>,
    pub min_eig_gamma_hat: f64,
}

pub fn corruption_for(cfg: &ExperimentConfig) -> CorruptionSpec {
    match cfg.channel {
        Channel::Clean => CorruptionSpec::Clean,
        Channel::Additive => CorruptionSpec::Additive { sigma_w: cfg.sigma_w },
        Channel::Missing => CorruptionSpec::Missing { rho: cfg.rho },
    }
}

/// Child seed of replication `k`. Shared across all cells of a sweep, so
/// neighbouring cells see common random numbers.
pub fn replication_seed(base_seed: u64, k: usize, channel: CorruptionSpec) -> u64 {
    mix64(base_seed, k as u64, channel.tag())
}

pub fn ground_truth(cfg: &ExperimentConfig, cell: Cell, seed: u64) -> eiv_core::Result<GroundTruth> {
    match cfg.truth {
        TruthRule::Rank(r) => gen_ground_truth_exact(cell.d1, cell.d2, r, 1.0, seed),
        TruthRule::Lq { q, rq } => gen_ground_truth_lq(cell.d1, cell.d2, q, rq, LQ_DECAY, seed),
    }
}

pub fn instance(cfg: &ExperimentConfig, cell: Cell, seed: u64) -> eiv_core::Result<ProblemInstance> {
    let gt = ground_truth(cfg, cell, seed)?;
    gen_dataset(
        &gt,
        cell.n,
        &CovarianceSpec::default(),
        cfg.sigma_eps,
        corruption_for(cfg),
        seed,
    )
}

/// `(λ, ω, v)` for one instance under the configured rules.
pub fn solver_config(
    cfg: &ExperimentConfig,
    inst: &ProblemInstance,
    pair: &SurrogatePair,
) -> eiv_core::Result<SolverConfig> {
    let lambda = match cfg.lambda {
        LambdaRule::SqrtDOverN => (inst.d1().max(inst.d2()) as f64 / inst.n as f64).sqrt(),
        LambdaRule::Explicit(l) => l,
    };
    let omega = match cfg.omega {
        OmegaRule::NuclearTruth => 1.1 * nuclear_norm(&inst.ground_truth.theta_star)?,
        OmegaRule::Explicit(w) => w,
    };
    let v = match cfg.v {
        VRule::SigmaX => default_inverse_step(Some(inst.sigma_x.lambda_max()?), pair)?,
        VRule::GammaHat => default_inverse_step(None, pair)?,
        VRule::Explicit(v) => v,
    };
    Ok(SolverConfig {
        lambda,
        omega,
        v,
        max_iters: cfg.max_iters,
        stop_tol: cfg.stop_tol,
        trace_every: cfg.trace_every,
    })
}

fn failed_record(cfg: &ExperimentConfig, cell: Cell, k: usize, seed: u64, msg: &str) -> ResultRecord {
    ResultRecord {
        preset: cfg.preset.clone(),
        channel: cfg.channel.name().to_string(),
        d1: cell.d1,
        d2: cell.d2,
        n: cell.n,
        rep_index: k,
        seed,
        lambda: f64::NAN,
        omega: f64::NAN,
        v: f64::NAN,
        iterations: 0,
        converged: false,
        rel_error: f64::NAN,
        final_objective: f64::NAN,
        deviation_statistic: f64::NAN,
        wall_time_ms: 0.0,
        status: format!("error: {}", msg.replace(['\n', '\r'], " ")),
    }
}

/// Generates, solves and scores one replication.
pub fn run_one(cfg: &ExperimentConfig, cell: Cell, k: usize, seed: u64) -> eiv_core::Result<RunDetail> {
    let start = Instant::now();
    let inst = instance(cfg, cell, seed)?;
    let pair = build_for_instance(&inst)?;
    let scfg = solver_config(cfg, &inst, &pair)?;
    let theta0 = DenseMatrix::zeros(cell.d1, cell.d2);
    let res = solve(&pair, &scfg, &theta0, None)?;
    let theta_star = &inst.ground_truth.theta_star;
    let rel = relative_error(&res.theta_hat, theta_star)?;
    let dev = deviation_statistic(&pair, theta_star)?;
    let alpha1 = inst.sigma_x.lambda_min()? / 2.0;
    let recovery_check = recovery_bound_check(&inst.ground_truth, &res.theta_hat, scfg.lambda, alpha1).ok();
    let min_eig = eiv_core::surrogate::min_eigenvalue(&pair.gamma_hat)?;

    let entries = res.trace.entries;
    let max_feasibility_excess = entries
        .iter()
        .map(|e| e.nuclear_norm - scfg.omega)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_objective_increase = entries
        .windows(2)
        .map(|w| w[1].objective - w[0].objective)
        .fold(f64::NEG_INFINITY, f64::max);

    let record = ResultRecord {
        preset: cfg.preset.clone(),
        channel: cfg.channel.name().to_string(),
        d1: cell.d1,
        d2: cell.d2,
        n: cell.n,
        rep_index: k,
        seed,
        lambda: scfg.lambda,
        omega: scfg.omega,
        v: scfg.v,
        iterations: res.iterations_run,
        converged: res.converged,
        rel_error: rel,
        final_objective: res.final_objective,
        deviation_statistic: dev,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        status: "ok".to_string(),
    };
    Ok(RunDetail {
        record,
        trace: entries,
        max_feasibility_excess,
        max_objective_increase,
        recovery_check,
        min_eig_gamma_hat: min_eig,
    })
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .context("building worker pool")
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "worker panicked".to_string()
    }
}

/// `(k, seed_k, outcome)` for one replication.
pub type Replication<T> = (usize, u64, std::result::Result<T, String>);

/// Runs `task(k, seed_k)` for `k in 0..reps` on `parallelism` workers,
/// with `seed_k = mix64(base_seed, k, tag)`. A panic or error in one
/// replication is captured in its slot. Output is ordered by `k`.
pub fn run_replications<T, F>(
    reps: usize,
    base_seed: u64,
    tag: u64,
    parallelism: usize,
    task: F,
) -> Result<Vec<Replication<T>>>
where
    T: Send,
    F: Fn(usize, u64) -> std::result::Result<T, String> + Sync,
{
    let jobs: Vec<(usize, u64)> = (0..reps).map(|k| (k, mix64(base_seed, k as u64, tag))).collect();
    run_jobs(&jobs, parallelism, |&(k, seed)| {
        let out = catch_unwind(AssertUnwindSafe(|| task(k, seed))).unwrap_or_else(|p| Err(panic_message(p)));
        (k, seed, out)
    })
}

fn run_jobs<J, T, F>(jobs: &[J], parallelism: usize, task: F) -> Result<Vec<T>>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> T + Sync,
{
    let pool = pool(parallelism)?;
    Ok(pool.install(|| jobs.par_iter().map(&task).collect()))
}

/// Every (cell, replication) of a sweep, sorted by cell then `rep_index`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<(Cell, RunOutcome)>> {
    let corruption = corruption_for(cfg);
    let mut jobs = Vec::new();
    for &(d1, d2) in &cfg.dims {
        for n in cfg.sample_grid.sizes_for(d1, d2) {
            let cell = Cell { d1, d2, n };
            for k in 0..cfg.reps {
                jobs.push((cell, k, replication_seed(cfg.base_seed, k, corruption)));
            }
        }
    }
    let mut out = run_jobs(&jobs, cfg.parallelism, |&(cell, k, seed)| {
        let outcome = match catch_unwind(AssertUnwindSafe(|| run_one(cfg, cell, k, seed))) {
            Ok(Ok(detail)) => RunOutcome::Ok(Box::new(detail)),
            Ok(Err(e)) => RunOutcome::Failed(failed_record(cfg, cell, k, seed, &e.to_string())),
            Err(p) => RunOutcome::Failed(failed_record(cfg, cell, k, seed, &panic_message(p))),
        };
        (cell, outcome)
    })?;
    out.sort_by_key(|(c, o)| (c.d1, c.d2, c.n, o.record().rep_index));
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum RunOutcome {
    Ok(Box<RunDetail>),
    Failed(ResultRecord),
}

impl RunOutcome {
    pub fn record(&self) -> &ResultRecord {
        match self {
            RunOutcome::Ok(d) => &d.record,
            RunOutcome::Failed(r) => r,
        }
    }

    pub fn detail(&self) -> Option<&RunDetail> {
        match self {
            RunOutcome::Ok(d) => Some(d),
            RunOutcome::Failed(_) => None,
        }
    }
}

/// Mean and sample standard deviation of the successful replications of
/// each cell, in sweep order.
pub fn summarize(cfg: &ExperimentConfig, outcomes: &[(Cell, RunOutcome)]) -> Vec<SummaryRecord> {
    let mut out: Vec<SummaryRecord> = Vec::new();
    let mut i = 0;
    while i < outcomes.len() {
        let cell = outcomes[i].0;
        let mut j = i;
        while j < outcomes.len() && outcomes[j].0 == cell {
            j += 1;
        }
        let errs: Vec<f64> = outcomes[i..j]
            .iter()
            .filter_map(|(_, o)| o.detail().map(|d| d.record.rel_error))
            .collect();
        let ok = errs.len();
        let mean = if ok > 0 {
            errs.iter().sum::<f64>() / ok as f64
        } else {
            f64::NAN
        };
        let sd = if ok > 1 {
            (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (ok - 1) as f64).sqrt()
        } else {
            f64::NAN
        };
        out.push(SummaryRecord {
            preset: cfg.preset.clone(),
            channel: cfg.channel.name().to_string(),
            d1: cell.d1,
            d2: cell.d2,
            n: cell.n,
            n_over_d: cell.n as f64 / cell.d1.max(cell.d2) as f64,
            reps_ok: ok,
            reps_failed: (j - i) - ok,
            mean_rel_error: mean,
            sd_rel_error: sd,
        });
        i = j;
    }
    out
}

/// Any cell whose replications all failed.
pub fn all_failed_cells(summary: &[SummaryRecord]) -> Vec<Cell> {
    summary
        .iter()
        .filter(|s| s.reps_ok == 0)
        .map(|s| Cell {
            d1: s.d1,
            d2: s.d2,
            n: s.n,
        })
        .collect()
}

pub struct ConsistencyRun {
    pub outcomes: Vec<(Cell, RunOutcome)>,
    pub summary: Vec<SummaryRecord>,
}

/// Replication sweep writing `cfg.out` and its summary file.
pub fn run_consistency(cfg: &ExperimentConfig) -> Result<ConsistencyRun> {
    let outcomes = run_sweep(cfg)?;
    let records: Vec<ResultRecord> = outcomes.iter().map(|(_, o)| o.record().clone()).collect();
    write_results(&records, &cfg.out)?;
    let summary = summarize(cfg, &outcomes);
    write_summary(&summary, &cfg.summary_path())?;
    Ok(ConsistencyRun { outcomes, summary })
}

pub fn trace_records(cfg: &ExperimentConfig, cell: Cell, detail: &RunDetail) -> Vec<TraceRecord> {
    let r = &detail.record;
    detail
        .trace
        .iter()
        .map(|e| TraceRecord {
            preset: cfg.preset.clone(),
            channel: cfg.channel.name().to_string(),
            d1: cell.d1,
            d2: cell.d2,
            n: cell.n,
            rep_index: r.rep_index,
            seed: r.seed,
            t: e.t,
            objective: e.objective,
            dist_to_final: e.dist_to_final,
            nuclear_norm: e.nuclear_norm,
        })
        .collect()
}

/// Fully traced solves, one per (cell, replication); writes the trace file
/// and the result rows.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConsistencyRun> {
    let outcomes = run_sweep(cfg)?;
    let mut traces = Vec::new();
    for (cell, o) in &outcomes {
        if let Some(d) = o.detail() {
            traces.extend(trace_records(cfg, *cell, d));
        }
    }
    let trace_path = cfg
        .trace_out
        .clone()
        .unwrap_or_else(|| cfg.out.with_file_name("traces.csv"));
    write_traces(&traces, &trace_path)?;
    let records: Vec<ResultRecord> = outcomes.iter().map(|(_, o)| o.record().clone()).collect();
    write_results(&records, &cfg.out)?;
    let summary = summarize(cfg, &outcomes);
    Ok(ConsistencyRun { outcomes, summary })
}

/// Dispatches on the preset kind.
pub fn run(cfg: &ExperimentConfig) -> Result<ConsistencyRun> {
    match cfg.kind {
        PresetKind::Convergence => run_convergence(cfg),
        _ => run_consistency(cfg),
    }
}
