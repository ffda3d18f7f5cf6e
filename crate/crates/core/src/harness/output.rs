//! Trace CSV, summary JSON and sweep tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Setting};
use super::run::{prepare, run_adversarial_prepared, run_stochastic_prepared, RoundRecord, RunOutput, RunSummary};
use crate::error::{PricingError, Result};

pub const TRACE_HEADER: &str = "t,curve_idx,buyer_type,amount,payment,feedback,cum_revenue,cum_regret";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub trace: PathBuf,
    pub summary: PathBuf,
}

impl OutputPaths {
    /// `<setting>_trace_<seed>.csv` and `<setting>_summary_<seed>.json`.
    pub fn in_dir(dir: impl AsRef<Path>, setting: Setting, seed: u64) -> Self {
        let dir = dir.as_ref();
        Self {
            trace: dir.join(format!("{}_trace_{seed}.csv", setting.name())),
            summary: dir.join(format!("{}_summary_{seed}.json", setting.name())),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PricingError {
    PricingError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn trace_csv(records: &[RoundRecord]) -> Result<String> {
    if records.is_empty() {
        return Ok(format!("{TRACE_HEADER}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| PricingError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| PricingError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| PricingError::Io(e.to_string()))
}

pub fn summary_json(summary: &RunSummary) -> Result<String> {
    let mut s = serde_json::to_string_pretty(summary).map_err(|e| PricingError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes the trace (when `paths.trace` is wanted) and the summary.
pub fn write_outputs(records: &[RoundRecord], summary: &RunSummary, paths: &OutputPaths) -> Result<()> {
    write_file(&paths.trace, trace_csv(records)?.as_bytes())?;
    write_file(&paths.summary, summary_json(summary)?.as_bytes())
}

/// Writes a run into `dir`, honoring `output.traces`.
pub fn write_run(output: &RunOutput, dir: impl AsRef<Path>) -> Result<OutputPaths> {
    let s = &output.summary;
    let paths = OutputPaths::in_dir(dir, s.setting, s.seed);
    if s.config.output.traces {
        write_outputs(&output.records, s, &paths)?;
    } else {
        write_file(&paths.summary, summary_json(s)?.as_bytes())?;
    }
    Ok(paths)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<RoundRecord>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| io_err(path, e))).collect()
}

/// One run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub setting: Setting,
    pub horizon: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub space_size: usize,
    pub benchmark: f64,
    pub total_revenue: f64,
    pub final_regret: f64,
}

/// Mean final regret per horizon, in sweep order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMean {
    pub horizon: u64,
    pub runs: usize,
    pub mean_regret: f64,
    /// Ratio to the previous horizon's mean, when there is one.
    pub ratio: Option<f64>,
}

/// Runs every (horizon, seed) pair of the `[sweep]` section. The space is
/// built once per horizon.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let spec = config
        .sweep
        .as_ref()
        .ok_or_else(|| PricingError::Config("missing [sweep] section".into()))?;
    let seeds = spec.seeds.clone().unwrap_or_else(|| config.run.seeds.clone());
    let mut rows = Vec::new();
    for &horizon in &spec.horizons {
        let prep = prepare(config, horizon)?;
        for &seed in &seeds {
            let out = match spec.setting {
                Setting::Stochastic => run_stochastic_prepared(&prep, seed)?,
                Setting::Adversarial => run_adversarial_prepared(&prep, seed)?,
            };
            let s = out.summary;
            rows.push(SweepRow {
                setting: spec.setting,
                horizon,
                seed,
                epsilon: prep.epsilon,
                space_size: s.space_size,
                benchmark: s.benchmark.value,
                total_revenue: s.total_revenue,
                final_regret: s.final_regret,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_means(rows: &[SweepRow]) -> Vec<SweepMean> {
    let mut out: Vec<SweepMean> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|m| m.horizon == r.horizon) {
            Some(m) => {
                m.runs += 1;
                m.mean_regret += r.final_regret;
            }
            None => out.push(SweepMean {
                horizon: r.horizon,
                runs: 1,
                mean_regret: r.final_regret,
                ratio: None,
            }),
        }
    }
    for m in &mut out {
        m.mean_regret /= m.runs as f64;
    }
    for k in 1..out.len() {
        out[k].ratio = Some(out[k].mean_regret / out[k - 1].mean_regret);
    }
    out
}

pub fn write_sweep(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["setting", "horizon", "seed", "epsilon", "space_size", "benchmark", "total_revenue", "final_regret"])
            .map_err(|e| io_err(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| io_err(path, e))?;
    write_file(path, &bytes)
}
