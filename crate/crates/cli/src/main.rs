use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eiv_cli::config::{self, ExperimentConfig, PRESETS};
use eiv_cli::runner::{self, Cell};
use eiv_core::diagnostics::{theory_report, ReportInputs, DEFAULT_PROBE_SAMPLES};
use eiv_core::linalg::DenseMatrix;

#[derive(Parser)]
#[command(
    name = "eiv",
    version,
    about = "Low-rank regression with corrupted covariates: simulations and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replication sweep and write result (and trace) CSVs.
    Simulate(Flags),
    /// Solve one seeded instance and print every diagnostic as JSON.
    Diagnose {
        #[command(flatten)]
        flags: Flags,
        /// Number of RSC probe directions.
        #[arg(long, default_value_t = DEFAULT_PROBE_SAMPLES)]
        probe_samples: usize,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// List presets and their parameters.
    Presets,
}

#[derive(Args, Default)]
struct Flags {
    #[arg(long)]
    preset: Option<String>,
    /// clean | additive | missing
    #[arg(long)]
    channel: Option<String>,
    /// Comma-separated dimensions, `D` (square) or `D1xD2`.
    #[arg(long)]
    d: Option<String>,
    /// Comma-separated sample sizes.
    #[arg(long = "n-grid")]
    n_grid: Option<String>,
    /// Comma-separated ratios α, with n = ⌈α d⌉.
    #[arg(long = "alpha-grid")]
    alpha_grid: Option<String>,
    #[arg(long)]
    rank: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    rq: Option<String>,
    #[arg(long = "sigma-w")]
    sigma_w: Option<String>,
    #[arg(long = "sigma-eps")]
    sigma_eps: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Number, or `sqrt_d_over_n`.
    #[arg(long)]
    lambda: Option<String>,
    /// Number, or `1.1_nuclear_norm_truth`.
    #[arg(long)]
    omega: Option<String>,
    /// Number, `sigma_x` or `gamma_hat`.
    #[arg(long)]
    v: Option<String>,
    #[arg(long = "max-iters")]
    max_iters: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long = "trace-every")]
    trace_every: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long = "trace-out")]
    trace_out: Option<String>,
    #[arg(long)]
    parallelism: Option<String>,
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn pairs(&self) -> Vec<(String, String)> {
        let fields: [(&str, &Option<String>); 22] = [
            ("preset", &self.preset),
            ("channel", &self.channel),
            ("d", &self.d),
            ("n-grid", &self.n_grid),
            ("alpha-grid", &self.alpha_grid),
            ("rank", &self.rank),
            ("q", &self.q),
            ("rq", &self.rq),
            ("sigma-w", &self.sigma_w),
            ("sigma-eps", &self.sigma_eps),
            ("rho", &self.rho),
            ("reps", &self.reps),
            ("seed", &self.seed),
            ("lambda", &self.lambda),
            ("omega", &self.omega),
            ("v", &self.v),
            ("max-iters", &self.max_iters),
            ("tol", &self.tol),
            ("trace-every", &self.trace_every),
            ("out", &self.out),
            ("trace-out", &self.trace_out),
            ("parallelism", &self.parallelism),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }

    fn resolve(&self) -> Result<ExperimentConfig, config::ConfigError> {
        config::resolve("consistency", self.config.as_deref(), &self.pairs())
    }
}

fn simulate(flags: &Flags) -> ExitCode {
    let cfg = match flags.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let run = match runner::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    for s in &run.summary {
        println!(
            "{} d1={} d2={} n={} ok={} failed={} mean_rel_error={:.6e}",
            s.channel, s.d1, s.d2, s.n, s.reps_ok, s.reps_failed, s.mean_rel_error
        );
    }
    let dead = runner::all_failed_cells(&run.summary);
    if !dead.is_empty() {
        for c in dead {
            eprintln!(
                "error: every replication failed in cell d1={} d2={} n={}",
                c.d1, c.d2, c.n
            );
        }
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}

fn diagnose(flags: &Flags, probe_samples: usize, report: Option<&PathBuf>) -> ExitCode {
    let cfg = match flags.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let (d1, d2) = cfg.dims[0];
    let n = cfg.sample_grid.sizes_for(d1, d2)[0];
    let cell = Cell { d1, d2, n };
    let seed = runner::replication_seed(cfg.base_seed, 0, runner::corruption_for(&cfg));
    let result = (|| -> anyhow::Result<String> {
        let inst = runner::instance(&cfg, cell, seed)?;
        let pair = eiv_core::build_for_instance(&inst)?;
        let mut scfg = runner::solver_config(&cfg, &inst, &pair)?;
        scfg.trace_every = 1;
        let res = eiv_core::solve(&pair, &scfg, &DenseMatrix::zeros(d1, d2), None)?;
        let rep = theory_report(
            &inst,
            &ReportInputs {
                pair: &pair,
                sigma_x: &inst.sigma_x,
                sigma_w: cfg.sigma_w,
                cfg: &scfg,
                theta_hat: &res.theta_hat,
                iterations: res.iterations_run,
                converged: res.converged,
                trace: &res.trace.entries,
                probe_samples,
                seed,
            },
        )?;
        Ok(serde_json::to_string_pretty(&rep)?)
    })();
    match result {
        Ok(json) => {
            if let Some(path) = report {
                if let Err(e) = std::fs::write(path, json + "\n") {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            } else {
                println!("{json}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn presets() -> ExitCode {
    for name in PRESETS {
        let cfg = config::preset(name).expect("builtin preset");
        match serde_json::to_string(&cfg) {
            Ok(s) => println!("{name}\t{s}"),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(flags) => simulate(flags),
        Command::Diagnose {
            flags,
            probe_samples,
            report,
        } => diagnose(flags, *probe_samples, report.as_ref()),
        Command::Presets => presets(),
    }
}
