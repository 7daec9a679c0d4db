//! Experiment configuration: presets, a flat `key = value` file format and
//! flag overrides. Later sources win: preset < file < flags.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    Consistency,
    Rescaled,
    Convergence,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Clean,
    Additive,
    Missing,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Clean => "clean",
            Channel::Additive => "additive",
            Channel::Missing => "missing",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleGrid {
    /// Absolute sample sizes.
    Sizes(Vec<usize>),
    /// Ratios `α`, giving `n = ⌈α d⌉` with `d = max(d1, d2)`.
    Ratios(Vec<f64>),
}

impl SampleGrid {
    pub fn sizes_for(&self, d1: usize, d2: usize) -> Vec<usize> {
        match self {
            SampleGrid::Sizes(v) => v.clone(),
            SampleGrid::Ratios(v) => {
                let d = d1.max(d2) as f64;
                v.iter().map(|a| (a * d).ceil() as usize).collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthRule {
    Rank(usize),
    Lq { q: f64, rq: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// `√(max(d1, d2) / n)`.
    SqrtDOverN,
    Explicit(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaRule {
    /// `1.1 ‖Θ*‖_*`.
    NuclearTruth,
    Explicit(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VRule {
    /// `2 λ_max(Σx)`.
    SigmaX,
    /// `2 max(|λ_min(Γ̂)|, λ_max(Γ̂))`, for when `Σx` is treated as unknown.
    GammaHat,
    Explicit(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub preset: String,
    pub kind: PresetKind,
    pub channel: Channel,
    pub dims: Vec<(usize, usize)>,
    pub sample_grid: SampleGrid,
    pub truth: TruthRule,
    pub sigma_eps: f64,
    pub sigma_w: f64,
    pub rho: f64,
    pub reps: usize,
    pub base_seed: u64,
    pub lambda: LambdaRule,
    pub omega: OmegaRule,
    pub v: VRule,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub trace_every: usize,
    pub out: PathBuf,
    pub trace_out: Option<PathBuf>,
    pub parallelism: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

pub const PRESETS: &[&str] = &[
    "consistency",
    "rescaled",
    "convergence",
    "convergence-small",
    "custom",
    "consistency-full",
    "rescaled-full",
    "convergence-full",
];

pub const DEFAULT_SEED: u64 = 20_240_517;

/// Every key accepted in a config file or as a flag (without the dashes).
pub const KEYS: &[&str] = &[
    "preset",
    "channel",
    "d",
    "n-grid",
    "alpha-grid",
    "rank",
    "q",
    "rq",
    "sigma-w",
    "sigma-eps",
    "rho",
    "reps",
    "seed",
    "lambda",
    "omega",
    "v",
    "max-iters",
    "tol",
    "trace-every",
    "out",
    "trace-out",
    "parallelism",
];

fn desk_consistency(name: &str, kind: PresetKind) -> ExperimentConfig {
    ExperimentConfig {
        preset: name.to_string(),
        kind,
        channel: Channel::Additive,
        dims: vec![(32, 32), (64, 64)],
        sample_grid: SampleGrid::Ratios(vec![5.0, 10.0, 20.0, 40.0]),
        truth: TruthRule::Rank(5),
        sigma_eps: 0.1,
        sigma_w: 0.2,
        rho: 0.2,
        reps: 20,
        base_seed: DEFAULT_SEED,
        lambda: LambdaRule::SqrtDOverN,
        omega: OmegaRule::NuclearTruth,
        v: VRule::SigmaX,
        max_iters: 2000,
        stop_tol: 1e-9,
        trace_every: 10,
        out: PathBuf::from("results.csv"),
        trace_out: None,
        parallelism: 1,
    }
}

fn convergence(name: &str, d: usize, r: usize) -> ExperimentConfig {
    ExperimentConfig {
        dims: vec![(d, d)],
        sample_grid: SampleGrid::Ratios(vec![15.0, 30.0, 50.0]),
        truth: TruthRule::Rank(r),
        reps: 1,
        max_iters: 2000,
        stop_tol: 1e-14,
        trace_every: 1,
        trace_out: Some(PathBuf::from("traces.csv")),
        ..desk_consistency(name, PresetKind::Convergence)
    }
}

/// Looks up a named preset.
pub fn preset(name: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg = match name {
        "consistency" => desk_consistency(name, PresetKind::Consistency),
        "rescaled" => ExperimentConfig {
            sample_grid: SampleGrid::Ratios(vec![5.0, 10.0, 20.0, 30.0, 40.0]),
            ..desk_consistency(name, PresetKind::Rescaled)
        },
        "convergence" => convergence(name, 64, 5),
        "convergence-small" => convergence(name, 32, 5),
        "custom" => desk_consistency(name, PresetKind::Custom),
        "consistency-full" => ExperimentConfig {
            dims: vec![(64, 64), (128, 128), (256, 256)],
            sample_grid: SampleGrid::Ratios(vec![2.5, 5.0, 10.0, 20.0, 40.0]),
            truth: TruthRule::Rank(10),
            reps: 100,
            ..desk_consistency(name, PresetKind::Consistency)
        },
        "rescaled-full" => ExperimentConfig {
            dims: vec![(64, 64), (128, 128), (256, 256)],
            sample_grid: SampleGrid::Ratios(vec![2.5, 5.0, 10.0, 20.0, 40.0]),
            truth: TruthRule::Rank(10),
            reps: 100,
            ..desk_consistency(name, PresetKind::Rescaled)
        },
        "convergence-full" => convergence(name, 128, 10),
        other => {
            return Err(ConfigError::new(
                "preset",
                format!("unknown preset `{other}` (expected one of {})", PRESETS.join(", ")),
            ))
        }
    };
    Ok(cfg)
}

fn parse_num<T: std::str::FromStr>(key: &str, raw: &str, what: &str) -> Result<T, ConfigError> {
    raw.trim()
        .parse::<T>()
        .map_err(|_| ConfigError::new(key, format!("expected {what}, got `{raw}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, raw: &str, what: &str) -> Result<Vec<T>, ConfigError> {
    let items: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(ConfigError::new(key, "grid must not be empty"));
    }
    items.iter().map(|s| parse_num(key, s, what)).collect()
}

fn parse_dims(key: &str, raw: &str) -> Result<Vec<(usize, usize)>, ConfigError> {
    let items: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(ConfigError::new(key, "grid must not be empty"));
    }
    items
        .iter()
        .map(|s| match s.split_once('x') {
            Some((a, b)) => Ok((parse_num(key, a, "an integer")?, parse_num(key, b, "an integer")?)),
            None => {
                let d = parse_num(key, s, "an integer or D1xD2")?;
                Ok((d, d))
            }
        })
        .collect()
}

impl ExperimentConfig {
    /// Applies one `key = value` override.
    pub fn apply(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
        let raw = raw.trim();
        match key {
            "preset" => {
                let base = preset(raw)?;
                *self = base;
            }
            "channel" => {
                self.channel = match raw {
                    "clean" => Channel::Clean,
                    "additive" => Channel::Additive,
                    "missing" => Channel::Missing,
                    _ => {
                        return Err(ConfigError::new(
                            key,
                            format!("expected clean|additive|missing, got `{raw}`"),
                        ))
                    }
                }
            }
            "d" => self.dims = parse_dims(key, raw)?,
            "n-grid" => self.sample_grid = SampleGrid::Sizes(parse_list(key, raw, "a list of integers")?),
            "alpha-grid" => self.sample_grid = SampleGrid::Ratios(parse_list(key, raw, "a list of reals")?),
            "rank" => self.truth = TruthRule::Rank(parse_num(key, raw, "an integer")?),
            "q" => {
                let q = parse_num(key, raw, "a real")?;
                self.truth = match self.truth {
                    TruthRule::Lq { rq, .. } => TruthRule::Lq { q, rq },
                    TruthRule::Rank(r) => TruthRule::Lq { q, rq: r as f64 },
                }
            }
            "rq" => {
                let rq = parse_num(key, raw, "a real")?;
                self.truth = match self.truth {
                    TruthRule::Lq { q, .. } => TruthRule::Lq { q, rq },
                    TruthRule::Rank(_) => TruthRule::Lq { q: 0.5, rq },
                }
            }
            "sigma-w" => self.sigma_w = parse_num(key, raw, "a real")?,
            "sigma-eps" => self.sigma_eps = parse_num(key, raw, "a real")?,
            "rho" => self.rho = parse_num(key, raw, "a real")?,
            "reps" => self.reps = parse_num(key, raw, "an integer")?,
            "seed" => self.base_seed = parse_num(key, raw, "a 64-bit unsigned integer")?,
            "lambda" => {
                self.lambda = match raw {
                    "sqrt_d_over_n" | "auto" => LambdaRule::SqrtDOverN,
                    _ => LambdaRule::Explicit(parse_num(key, raw, "a real or `sqrt_d_over_n`")?),
                }
            }
            "omega" => {
                self.omega = match raw {
                    "1.1_nuclear_norm_truth" | "auto" => OmegaRule::NuclearTruth,
                    _ => OmegaRule::Explicit(parse_num(key, raw, "a real or `1.1_nuclear_norm_truth`")?),
                }
            }
            "v" => {
                self.v = match raw {
                    "sigma_x" | "auto" => VRule::SigmaX,
                    "gamma_hat" => VRule::GammaHat,
                    _ => VRule::Explicit(parse_num(key, raw, "a real, `sigma_x` or `gamma_hat`")?),
                }
            }
            "max-iters" => self.max_iters = parse_num(key, raw, "an integer")?,
            "tol" => self.stop_tol = parse_num(key, raw, "a real")?,
            "trace-every" => self.trace_every = parse_num(key, raw, "an integer")?,
            "out" => self.out = PathBuf::from(raw),
            "trace-out" => self.trace_out = Some(PathBuf::from(raw)),
            "parallelism" => self.parallelism = parse_num(key, raw, "an integer")?,
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(key, format!("must be finite and > 0, got {v}")))
            }
        };
        let nonneg = |key: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(key, format!("must be finite and >= 0, got {v}")))
            }
        };
        if self.dims.is_empty() {
            return Err(ConfigError::new("d", "grid must not be empty"));
        }
        if self.dims.iter().any(|&(a, b)| a == 0 || b == 0) {
            return Err(ConfigError::new("d", "dimensions must be >= 1"));
        }
        match &self.sample_grid {
            SampleGrid::Sizes(v) => {
                if v.is_empty() {
                    return Err(ConfigError::new("n-grid", "grid must not be empty"));
                }
                if v.contains(&0) {
                    return Err(ConfigError::new("n-grid", "sample sizes must be >= 1"));
                }
            }
            SampleGrid::Ratios(v) => {
                if v.is_empty() {
                    return Err(ConfigError::new("alpha-grid", "grid must not be empty"));
                }
                for &a in v {
                    positive("alpha-grid", a)?;
                }
            }
        }
        match self.truth {
            TruthRule::Rank(r) => {
                let cap = self.dims.iter().map(|&(a, b)| a.min(b)).min().unwrap_or(0);
                if r == 0 || r > cap {
                    return Err(ConfigError::new("rank", format!("must lie in 1..={cap}, got {r}")));
                }
            }
            TruthRule::Lq { q, rq } => {
                if !(q > 0.0 && q <= 1.0) {
                    return Err(ConfigError::new("q", format!("must lie in (0, 1], got {q}")));
                }
                positive("rq", rq)?;
            }
        }
        nonneg("sigma-eps", self.sigma_eps)?;
        nonneg("sigma-w", self.sigma_w)?;
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return Err(ConfigError::new("rho", format!("must lie in [0, 1), got {}", self.rho)));
        }
        if self.reps == 0 {
            return Err(ConfigError::new("reps", "must be >= 1"));
        }
        if let LambdaRule::Explicit(l) = self.lambda {
            positive("lambda", l)?;
        }
        if let OmegaRule::Explicit(w) = self.omega {
            positive("omega", w)?;
        }
        if let VRule::Explicit(v) = self.v {
            positive("v", v)?;
        }
        if self.max_iters == 0 {
            return Err(ConfigError::new("max-iters", "must be >= 1"));
        }
        positive("tol", self.stop_tol)?;
        if self.trace_every == 0 {
            return Err(ConfigError::new("trace-every", "must be >= 1"));
        }
        if self.parallelism == 0 {
            return Err(ConfigError::new("parallelism", "must be >= 1"));
        }
        Ok(())
    }

    /// Path of the per-cell summary written next to the results file.
    pub fn summary_path(&self) -> PathBuf {
        let stem = self.out.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
        self.out.with_file_name(format!("{stem}.summary.csv"))
    }
}

/// Parses the flat config format: one `key = value` per line, `#` comments,
/// keys spelled like the flags without the leading dashes.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::new(
                line,
                format!("line {}: expected `key = value`", lineno + 1),
            ));
        };
        let k = k.trim().trim_start_matches("--").replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            return Err(ConfigError::new(&k, "unknown key"));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Resolves a configuration from an optional file and flag overrides.
///
/// The preset comes from the flags if given, else from the file, else
/// `default_preset`. File entries are then applied, then flags.
pub fn resolve(
    default_preset: &str,
    file: Option<&Path>,
    flags: &[(String, String)],
) -> Result<ExperimentConfig, ConfigError> {
    let file_entries = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", p.display())))?;
            parse_config_text(&text)?
        }
        None => Vec::new(),
    };
    let find_preset = |entries: &[(String, String)]| {
        entries
            .iter()
            .rev()
            .find(|(k, _)| k == "preset")
            .map(|(_, v)| v.clone())
    };
    let name = find_preset(flags)
        .or_else(|| find_preset(&file_entries))
        .unwrap_or_else(|| default_preset.to_string());
    let mut cfg = preset(&name)?;
    for (k, v) in file_entries.iter().chain(flags) {
        if k == "preset" {
            continue;
        }
        cfg.apply(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
