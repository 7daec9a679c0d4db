//! CSV schemas for replication results, solver traces and per-cell summaries.

use std::path::Path;

use anyhow::{bail, Context, Result};

pub const RESULT_HEADER: &[&str] = &[
    "preset",
    "channel",
    "d1",
    "d2",
    "n",
    "rep_index",
    "seed",
    "lambda",
    "omega",
    "v",
    "iterations",
    "converged",
    "rel_error",
    "final_objective",
    "deviation_statistic",
    "wall_time_ms",
    "status",
];

pub const TRACE_HEADER: &[&str] = &[
    "preset",
    "channel",
    "d1",
    "d2",
    "n",
    "rep_index",
    "seed",
    "t",
    "objective",
    "dist_to_final",
    "nuclear_norm",
];

pub const SUMMARY_HEADER: &[&str] = &[
    "preset",
    "channel",
    "d1",
    "d2",
    "n",
    "n_over_d",
    "reps_ok",
    "reps_failed",
    "mean_rel_error",
    "sd_rel_error",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub preset: String,
    pub channel: String,
    pub d1: usize,
    pub d2: usize,
    pub n: usize,
    pub rep_index: usize,
    pub seed: u64,
    pub lambda: f64,
    pub omega: f64,
    pub v: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rel_error: f64,
    pub final_objective: f64,
    pub deviation_statistic: f64,
    pub wall_time_ms: f64,
    /// `ok`, or `error: <message>` for a failed replication.
    pub status: String,
}

impl ResultRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub preset: String,
    pub channel: String,
    pub d1: usize,
    pub d2: usize,
    pub n: usize,
    pub rep_index: usize,
    pub seed: u64,
    pub t: usize,
    pub objective: f64,
    pub dist_to_final: f64,
    pub nuclear_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRecord {
    pub preset: String,
    pub channel: String,
    pub d1: usize,
    pub d2: usize,
    pub n: usize,
    pub n_over_d: f64,
    pub reps_ok: usize,
    pub reps_failed: usize,
    pub mean_rel_error: f64,
    pub sd_rel_error: f64,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    let file = std::fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

pub fn write_results(records: &[ResultRecord], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(RESULT_HEADER)?;
    for r in records {
        w.write_record([
            r.preset.clone(),
            r.channel.clone(),
            r.d1.to_string(),
            r.d2.to_string(),
            r.n.to_string(),
            r.rep_index.to_string(),
            r.seed.to_string(),
            fmt_f64(r.lambda),
            fmt_f64(r.omega),
            fmt_f64(r.v),
            r.iterations.to_string(),
            r.converged.to_string(),
            fmt_f64(r.rel_error),
            fmt_f64(r.final_objective),
            fmt_f64(r.deviation_statistic),
            fmt_f64(r.wall_time_ms),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_traces(records: &[TraceRecord], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TRACE_HEADER)?;
    for r in records {
        w.write_record([
            r.preset.clone(),
            r.channel.clone(),
            r.d1.to_string(),
            r.d2.to_string(),
            r.n.to_string(),
            r.rep_index.to_string(),
            r.seed.to_string(),
            r.t.to_string(),
            fmt_f64(r.objective),
            fmt_f64(r.dist_to_final),
            fmt_f64(r.nuclear_norm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(records: &[SummaryRecord], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in records {
        w.write_record([
            r.preset.clone(),
            r.channel.clone(),
            r.d1.to_string(),
            r.d2.to_string(),
            r.n.to_string(),
            fmt_f64(r.n_over_d),
            r.reps_ok.to_string(),
            r.reps_failed.to_string(),
            fmt_f64(r.mean_rel_error),
            fmt_f64(r.sd_rel_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != header {
        bail!("{}: unexpected header {:?}", path.display(), found);
    }
    Ok(rdr)
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = row.get(i).with_context(|| format!("missing column {name}"))?;
    raw.parse::<T>()
        .map_err(|_| anyhow::anyhow!("column {name}: cannot parse `{raw}`"))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut rdr = reader(path, RESULT_HEADER)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        out.push(ResultRecord {
            preset: field(&row, 0, "preset")?,
            channel: field(&row, 1, "channel")?,
            d1: field(&row, 2, "d1")?,
            d2: field(&row, 3, "d2")?,
            n: field(&row, 4, "n")?,
            rep_index: field(&row, 5, "rep_index")?,
            seed: field(&row, 6, "seed")?,
            lambda: field(&row, 7, "lambda")?,
            omega: field(&row, 8, "omega")?,
            v: field(&row, 9, "v")?,
            iterations: field(&row, 10, "iterations")?,
            converged: field(&row, 11, "converged")?,
            rel_error: field(&row, 12, "rel_error")?,
            final_objective: field(&row, 13, "final_objective")?,
            deviation_statistic: field(&row, 14, "deviation_statistic")?,
            wall_time_ms: field(&row, 15, "wall_time_ms")?,
            status: field(&row, 16, "status")?,
        });
    }
    Ok(out)
}

pub fn read_traces(path: &Path) -> Result<Vec<TraceRecord>> {
    let mut rdr = reader(path, TRACE_HEADER)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        out.push(TraceRecord {
            preset: field(&row, 0, "preset")?,
            channel: field(&row, 1, "channel")?,
            d1: field(&row, 2, "d1")?,
            d2: field(&row, 3, "d2")?,
            n: field(&row, 4, "n")?,
            rep_index: field(&row, 5, "rep_index")?,
            seed: field(&row, 6, "seed")?,
            t: field(&row, 7, "t")?,
            objective: field(&row, 8, "objective")?,
            dist_to_final: field(&row, 9, "dist_to_final")?,
            nuclear_norm: field(&row, 10, "nuclear_norm")?,
        });
    }
    Ok(out)
}
