// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Operator-level entry points: replay a scenario into an output directory,
//! compare against a statically provisioned cluster, validate a file.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::LayoutKind;
use crate::report::SummaryReport;
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::{
    run_scenario_with, ProvisioningMode, SimError, SimEvent, SimOutput, TimeSeriesPoint,
};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const COMPARISON_FILE: &str = "comparison.json";
pub const TIMESERIES_HEADER: [&str; 5] = [
    "time_s",
    "volume_id",
    "demand_iops",
    "achieved_iops",
    "cap_iops",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
    #[error("encoding output: {0}")]
    Json(#[from] serde_json::Error),
    #[error("encoding output: {0}")]
    Csv(#[from] csv::Error),
}

pub fn write_events(events: &[SimEvent], w: impl Write) -> Result<(), ExperimentError> {
    let mut w = BufWriter::new(w);
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timeseries(points: &[TimeSeriesPoint], w: impl Write) -> Result<(), ExperimentError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(TIMESERIES_HEADER)?;
    for p in points {
        csv.write_record([
            format!("{:.6}", p.time_s),
            p.volume_id.to_string(),
            p.demand_iops.to_string(),
            p.achieved_iops.to_string(),
            p.cap_iops.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Writes `events.jsonl`, `timeseries.csv` and `summary.json` into `dir`.
pub fn write_outputs(output: &SimOutput, dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir)?;
    write_events(&output.events, File::create(dir.join(EVENTS_FILE))?)?;
    write_timeseries(&output.timeseries, File::create(dir.join(TIMESERIES_FILE))?)?;
    let mut f = BufWriter::new(File::create(dir.join(SUMMARY_FILE))?);
    serde_json::to_writer_pretty(&mut f, &output.summary)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn run(scenario_path: &Path, seed: u64, out: &Path) -> Result<SimOutput, ExperimentError> {
    let scenario = Scenario::from_path(scenario_path)?;
    let output = run_scenario_with(&scenario, seed, ProvisioningMode::LateBinding)?;
    write_outputs(&output, out)?;
    Ok(output)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub mode: String,
    pub accepted: usize,
    pub rejected: usize,
    pub raw_bytes: u64,
    pub logical_bytes: f64,
    pub overhead_ratio: Option<f64>,
    pub total_storage_overhead: Option<f64>,
}

impl ModeResult {
    fn from_summary(mode: String, s: &SummaryReport) -> Self {
        Self {
            mode,
            accepted: s.accepted,
            rejected: s.rejected,
            raw_bytes: s.overhead.raw_bytes,
            logical_bytes: s.overhead.logical_bytes,
            overhead_ratio: s.overhead.overhead_ratio,
            total_storage_overhead: s.overhead.total_storage_overhead,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub static_layout: LayoutKind,
    pub dynamic: ModeResult,
    #[serde(rename = "static")]
    pub static_: ModeResult,
}

#[derive(Debug, Clone)]
pub struct ComparisonRun {
    pub comparison: Comparison,
    pub dynamic: SimOutput,
    pub static_: SimOutput,
}

/// Replays the scenario late-bound and again over a cluster pre-carved into
/// `layout`, and lines up the overhead of both.
pub fn compare_static(
    scenario: &Scenario,
    layout: LayoutKind,
    seed: u64,
) -> Result<ComparisonRun, ExperimentError> {
    let dynamic = run_scenario_with(scenario, seed, ProvisioningMode::LateBinding)?;
    let static_ = run_scenario_with(scenario, seed, ProvisioningMode::Static(layout))?;
    let comparison = Comparison {
        static_layout: layout,
        dynamic: ModeResult::from_summary("dynamic".into(), &dynamic.summary),
        static_: ModeResult::from_summary(format!("static {layout}"), &static_.summary),
    };
    Ok(ComparisonRun {
        comparison,
        dynamic,
        static_,
    })
}

/// Runs [`compare_static`] and writes `dynamic/`, `static/` and `comparison.json` under `out`.
pub fn compare_static_to_dir(
    scenario_path: &Path,
    layout: LayoutKind,
    seed: u64,
    out: &Path,
) -> Result<ComparisonRun, ExperimentError> {
    let scenario = Scenario::from_path(scenario_path)?;
    let run = compare_static(&scenario, layout, seed)?;
    write_outputs(&run.dynamic, &out.join("dynamic"))?;
    write_outputs(&run.static_, &out.join("static"))?;
    let mut f = BufWriter::new(File::create(out.join(COMPARISON_FILE))?);
    serde_json::to_writer_pretty(&mut f, &run.comparison)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(run)
}

/// All problems in the file; empty means valid.
pub fn validate(scenario_path: &Path) -> Vec<String> {
    match Scenario::from_path(scenario_path) {
        Ok(_) => Vec::new(),
        Err(e) => e.diagnostics.iter().map(ToString::to_string).collect(),
    }
}
