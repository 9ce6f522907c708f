// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Scenario documents (TOML): cluster inventory, volume types, a timed
//! request list and synthetic workloads.
//!
//! Parsing never stops at the first problem; [`ScenarioError`] carries every
//! diagnostic found, each tagged with the offending field path.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::model::{
    parse_size, parse_volume_type, ControlConfig, DiskSpec, InstanceId, Medium, RequestId,
    StorageNode, VolumeId, VolumeType,
};
use crate::sim::{Demand, WorkloadSpec};

/// Application name used when a create request names none.
pub const DEFAULT_APPLICATION: &str = "default";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, PartialEq)]
pub enum RequestAction {
    Create {
        volume_id: VolumeId,
        volume_type: String,
        size: u64,
        application: String,
    },
    Delete {
        volume_id: VolumeId,
    },
    Attach {
        volume_id: VolumeId,
        instance: InstanceId,
    },
    Detach {
        volume_id: VolumeId,
    },
}

impl RequestAction {
    pub fn op(&self) -> &'static str {
        match self {
            RequestAction::Create { .. } => "create",
            RequestAction::Delete { .. } => "delete",
            RequestAction::Attach { .. } => "attach",
            RequestAction::Detach { .. } => "detach",
        }
    }

    pub fn volume_id(&self) -> &VolumeId {
        match self {
            RequestAction::Create { volume_id, .. }
            | RequestAction::Delete { volume_id }
            | RequestAction::Attach { volume_id, .. }
            | RequestAction::Detach { volume_id } => volume_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRequest {
    pub index: usize,
    pub request_id: RequestId,
    pub at: f64,
    pub action: RequestAction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub nodes: Vec<StorageNode>,
    pub volume_types: BTreeMap<String, VolumeType>,
    /// Application name to its own (application-layer) copy count.
    pub applications: BTreeMap<String, u32>,
    pub requests: Vec<ScenarioRequest>,
    pub workloads: Vec<WorkloadSpec>,
    pub control: ControlConfig,
    pub gc_period_s: f64,
    pub degradation: f64,
    pub duration_s: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SizeValue {
    Int(i64),
    Text(String),
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RawScenario {
    duration_s: Option<f64>,
    control: RawControl,
    nodes: Vec<RawNode>,
    volume_types: BTreeMap<String, BTreeMap<String, toml::Value>>,
    applications: BTreeMap<String, RawApplication>,
    requests: Vec<RawRequest>,
    workloads: Vec<RawWorkload>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RawControl {
    control_interval_s: Option<f64>,
    gc_dwell_s: Option<f64>,
    gc_period_s: Option<f64>,
    throttle_floor_iops: Option<i64>,
    degradation: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    #[serde(default)]
    disks: Vec<RawDisk>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisk {
    id: Option<String>,
    count: Option<i64>,
    capacity: SizeValue,
    #[serde(default = "default_medium")]
    medium: Medium,
    iops: i64,
}

fn default_medium() -> Medium {
    Medium::Hdd
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawApplication {
    copies: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRequest {
    id: Option<String>,
    at: f64,
    op: String,
    volume: Option<String>,
    #[serde(rename = "type")]
    volume_type: Option<String>,
    size: Option<SizeValue>,
    application: Option<String>,
    instance: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkload {
    volume: String,
    constant: Option<i64>,
    trace: Option<Vec<(f64, i64)>>,
    random: Option<RawWalk>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWalk {
    seed: u64,
    mean: i64,
    jitter: i64,
}

#[derive(Default)]
struct Diags(Vec<Diagnostic>);

impl Diags {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            path: path.into(),
            message: message.into(),
        });
    }
}

fn size_value(v: &SizeValue, path: &str, diags: &mut Diags) -> Option<u64> {
    match v {
        SizeValue::Int(n) if *n > 0 => Some(*n as u64),
        SizeValue::Int(n) => {
            diags.push(path, format!("size must be positive, got {n}"));
            None
        }
        SizeValue::Text(s) if s.trim_start().starts_with('-') => {
            diags.push(path, format!("size must be positive, got {s:?}"));
            None
        }
        SizeValue::Text(s) => match parse_size(s) {
            Ok(0) => {
                diags.push(path, "size must be positive");
                None
            }
            Ok(n) => Some(n),
            Err(e) => {
                diags.push(path, e.to_string());
                None
            }
        },
    }
}

fn scalar_string(v: &toml::Value) -> Option<String> {
    match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(f.to_string()),
        toml::Value::Boolean(b) => Some(b.to_string()),
        _ => None,
    }
}

fn nonnegative(v: i64, path: &str, what: &str, diags: &mut Diags) -> u64 {
    if v < 0 {
        diags.push(path, format!("{what} must be nonnegative, got {v}"));
        0
    } else {
        v as u64
    }
}

impl std::str::FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::parse(s)
    }
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError {
            diagnostics: vec![Diagnostic {
                path: path.display().to_string(),
                message: e.to_string(),
            }],
        })?;
        Self::parse(&text)
    }

    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError {
            diagnostics: vec![Diagnostic {
                path: "<document>".into(),
                message: e.to_string().trim_end().replace('\n', " | "),
            }],
        })?;
        let mut diags = Diags::default();
        let scenario = build(raw, &mut diags);
        if diags.0.is_empty() {
            Ok(scenario)
        } else {
            Err(ScenarioError {
                diagnostics: diags.0,
            })
        }
    }

    /// Every create request's application, by volume.
    pub fn applications_by_volume(&self) -> BTreeMap<VolumeId, String> {
        self.requests
            .iter()
            .filter_map(|r| match &r.action {
                RequestAction::Create {
                    volume_id,
                    application,
                    ..
                } => Some((volume_id.clone(), application.clone())),
                _ => None,
            })
            .collect()
    }
}

fn build(raw: RawScenario, diags: &mut Diags) -> Scenario {
    let c = &raw.control;
    let control_interval_s = c.control_interval_s.unwrap_or(5.0);
    if !(control_interval_s > 0.0 && control_interval_s.is_finite()) {
        diags.push(
            "control.control_interval_s",
            format!("must be positive, got {control_interval_s}"),
        );
    }
    let gc_dwell_s = c.gc_dwell_s.unwrap_or(300.0);
    if !(gc_dwell_s >= 0.0 && gc_dwell_s.is_finite()) {
        diags.push(
            "control.gc_dwell_s",
            format!("must be nonnegative, got {gc_dwell_s}"),
        );
    }
    let gc_period_s = c.gc_period_s.unwrap_or(control_interval_s);
    if !(gc_period_s > 0.0 && gc_period_s.is_finite()) {
        diags.push(
            "control.gc_period_s",
            format!("must be positive, got {gc_period_s}"),
        );
    }
    let throttle_floor_iops = nonnegative(
        c.throttle_floor_iops.unwrap_or(0),
        "control.throttle_floor_iops",
        "floor",
        diags,
    );
    let degradation = c.degradation.unwrap_or(1.0);
    if !(degradation > 0.0 && degradation <= 1.0) {
        diags.push(
            "control.degradation",
            format!("must be in (0, 1], got {degradation}"),
        );
    }
    let control = ControlConfig {
        control_interval_s,
        gc_dwell_s,
        throttle_floor_iops,
    };

    let nodes = build_nodes(&raw.nodes, diags);

    let mut volume_types = BTreeMap::new();
    for (name, kv) in &raw.volume_types {
        let path = format!("volume_types.{name:?}");
        let mut map = BTreeMap::new();
        for (k, v) in kv {
            match scalar_string(v) {
                Some(s) => {
                    map.insert(k.clone(), s);
                }
                None => diags.push(format!("{path}.{k}"), "value must be a scalar"),
            }
        }
        match parse_volume_type(&map, name) {
            Ok(vt) => {
                volume_types.insert(name.clone(), vt);
            }
            Err(e) => diags.push(path, e.to_string()),
        }
    }

    let mut applications = BTreeMap::from([(DEFAULT_APPLICATION.to_owned(), 1u32)]);
    for (name, app) in &raw.applications {
        match u32::try_from(app.copies) {
            Ok(n) if n >= 1 => {
                applications.insert(name.clone(), n);
            }
            _ => diags.push(
                format!("applications.{name:?}.copies"),
                format!("must be at least 1, got {}", app.copies),
            ),
        }
    }

    let requests = build_requests(&raw, &applications, diags);
    let created: BTreeSet<VolumeId> = requests
        .iter()
        .filter(|r| matches!(r.action, RequestAction::Create { .. }))
        .map(|r| r.action.volume_id().clone())
        .collect();
    let workloads = build_workloads(&raw.workloads, &created, diags);

    let last = requests.iter().map(|r| r.at).fold(0.0, f64::max);
    let duration_s = raw.duration_s.unwrap_or(last);
    if !(duration_s >= 0.0 && duration_s.is_finite()) {
        diags.push(
            "duration_s",
            format!("must be nonnegative, got {duration_s}"),
        );
    } else if duration_s < last {
        diags.push(
            "duration_s",
            format!("{duration_s} ends before the last request at {last}"),
        );
    }

    Scenario {
        nodes,
        volume_types,
        applications,
        requests,
        workloads,
        control,
        gc_period_s,
        degradation,
        duration_s,
    }
}

fn build_nodes(raw: &[RawNode], diags: &mut Diags) -> Vec<StorageNode> {
    let mut seen = BTreeSet::new();
    let mut nodes = Vec::new();
    for (ni, n) in raw.iter().enumerate() {
        let npath = format!("nodes[{ni}]");
        if n.id.trim().is_empty() {
            diags.push(format!("{npath}.id"), "node id is empty");
        } else if !seen.insert(n.id.clone()) {
            diags.push(
                format!("{npath}.id"),
                format!("duplicate node id {:?}", n.id),
            );
        }
        let total: i64 = n.disks.iter().map(|d| d.count.unwrap_or(1).max(0)).sum();
        let width = (total.max(1) - 1).to_string().len().max(2);
        let mut disks = Vec::new();
        let mut ids = BTreeSet::new();
        let mut ordinal = 0usize;
        for (di, d) in n.disks.iter().enumerate() {
            let dpath = format!("{npath}.disks[{di}]");
            let count = d.count.unwrap_or(1);
            if count < 1 {
                diags.push(
                    format!("{dpath}.count"),
                    format!("node {}: count must be at least 1, got {count}", n.id),
                );
                continue;
            }
            if d.id.is_some() && count > 1 {
                diags.push(format!("{dpath}.id"), "an explicit id needs count = 1");
            }
            let label = d.id.clone().unwrap_or_else(|| format!("#{di}"));
            let capacity = match &d.capacity {
                SizeValue::Int(v) if *v <= 0 => {
                    diags.push(
                        format!("{dpath}.capacity"),
                        format!(
                            "node {} disk {label}: capacity must be positive, got {v}",
                            n.id
                        ),
                    );
                    None
                }
                other => {
                    let mut local = Diags::default();
                    let parsed = size_value(other, &format!("{dpath}.capacity"), &mut local);
                    for mut l in local.0 {
                        l.message = format!("node {} disk {label}: {}", n.id, l.message);
                        diags.0.push(l);
                    }
                    parsed
                }
            };
            let iops = nonnegative(
                d.iops,
                &format!("{dpath}.iops"),
                &format!("node {} disk {label}: iops", n.id),
                diags,
            );
            for _ in 0..count {
                let id =
                    d.id.clone()
                        .unwrap_or_else(|| format!("{}-d{ordinal:0width$}", n.id));
                ordinal += 1;
                if !ids.insert(id.clone()) {
                    diags.push(
                        format!("{dpath}.id"),
                        format!("node {}: duplicate disk id {id:?}", n.id),
                    );
                }
                if let Some(capacity) = capacity {
                    disks.push(DiskSpec::new(id, capacity, d.medium, iops));
                }
            }
        }
        nodes.push(StorageNode::new(n.id.clone(), disks));
    }
    nodes
}

fn build_requests(
    raw: &RawScenario,
    applications: &BTreeMap<String, u32>,
    diags: &mut Diags,
) -> Vec<ScenarioRequest> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    let mut live: BTreeSet<String> = BTreeSet::new();
    let mut ever: BTreeSet<String> = BTreeSet::new();
    let mut prev_at: Option<(usize, f64)> = None;
    for (i, r) in raw.requests.iter().enumerate() {
        let path = format!("requests[{i}]");
        let request_id = r.id.clone().unwrap_or_else(|| format!("req-{}", i + 1));
        if !ids.insert(request_id.clone()) {
            diags.push(
                format!("{path}.id"),
                format!("duplicate request id {request_id:?}"),
            );
        }
        if !(r.at >= 0.0 && r.at.is_finite()) {
            diags.push(
                format!("{path}.at"),
                format!("must be a nonnegative time, got {}", r.at),
            );
        }
        if let Some((pi, pat)) = prev_at {
            if r.at < pat {
                diags.push(
                    format!("{path}.at"),
                    format!(
                        "requests[{i}] at {} is earlier than requests[{pi}] at {pat}",
                        r.at
                    ),
                );
            }
        }
        prev_at = Some((i, r.at));

        let volume = r.volume.clone();
        let need_volume = |diags: &mut Diags| -> Option<String> {
            if volume.is_none() {
                diags.push(format!("{path}.volume"), format!("{} needs a volume", r.op));
            }
            volume.clone()
        };
        let action = match r.op.as_str() {
            "create" => {
                let volume_id = volume.clone().unwrap_or_else(|| format!("vol-{}", i + 1));
                if ever.contains(&volume_id) {
                    diags.push(
                        format!("{path}.volume"),
                        format!("volume {volume_id:?} is created twice"),
                    );
                }
                ever.insert(volume_id.clone());
                live.insert(volume_id.clone());
                let ty = match &r.volume_type {
                    None => {
                        diags.push(format!("{path}.type"), "create needs a volume type");
                        None
                    }
                    Some(t) if !raw.volume_types.contains_key(t) => {
                        diags.push(
                            format!("{path}.type"),
                            format!("request #{} references undefined volume type {t:?}", i + 1),
                        );
                        None
                    }
                    Some(t) => Some(t.clone()),
                };
                let size = match &r.size {
                    None => {
                        diags.push(format!("{path}.size"), "create needs a size");
                        None
                    }
                    Some(v) => size_value(v, &format!("{path}.size"), diags),
                };
                let application = r
                    .application
                    .clone()
                    .unwrap_or_else(|| DEFAULT_APPLICATION.to_owned());
                if !applications.contains_key(&application)
                    && !raw.applications.contains_key(&application)
                {
                    diags.push(
                        format!("{path}.application"),
                        format!("undefined application {application:?}"),
                    );
                }
                match (ty, size) {
                    (Some(volume_type), Some(size)) => Some(RequestAction::Create {
                        volume_id: volume_id.into(),
                        volume_type,
                        size,
                        application,
                    }),
                    _ => None,
                }
            }
            "delete" | "attach" | "detach" => {
                let v = need_volume(diags);
                if let Some(v) = &v {
                    if !ever.contains(v) {
                        diags.push(
                            format!("{path}.volume"),
                            format!("volume {v:?} is not created by an earlier request"),
                        );
                    }
                }
                if r.op == "delete" {
                    if let Some(v) = &v {
                        live.remove(v);
                    }
                }
                let instance = if r.op == "attach" {
                    if r.instance.is_none() {
                        diags.push(format!("{path}.instance"), "attach needs an instance");
                    }
                    r.instance.clone()
                } else {
                    None
                };
                v.map(|v| {
                    let volume_id = VolumeId::from(v);
                    match r.op.as_str() {
                        "delete" => RequestAction::Delete { volume_id },
                        "attach" => RequestAction::Attach {
                            volume_id,
                            instance: instance.unwrap_or_else(|| "".to_owned()).into(),
                        },
                        _ => RequestAction::Detach { volume_id },
                    }
                })
            }
            other => {
                diags.push(
                    format!("{path}.op"),
                    format!("unknown op {other:?} (create, delete, attach, detach)"),
                );
                None
            }
        };
        if let Some(action) = action {
            out.push(ScenarioRequest {
                index: i,
                request_id: request_id.into(),
                at: r.at,
                action,
            });
        }
    }
    out
}

fn build_workloads(
    raw: &[RawWorkload],
    created: &BTreeSet<VolumeId>,
    diags: &mut Diags,
) -> Vec<WorkloadSpec> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, w) in raw.iter().enumerate() {
        let path = format!("workloads[{i}]");
        let volume_id = VolumeId::from(w.volume.as_str());
        if !created.contains(&volume_id) {
            diags.push(
                format!("{path}.volume"),
                format!("no request creates volume {:?}", w.volume),
            );
        }
        if !seen.insert(volume_id.clone()) {
            diags.push(
                format!("{path}.volume"),
                format!("second workload for {:?}", w.volume),
            );
        }
        let kinds = [w.constant.is_some(), w.trace.is_some(), w.random.is_some()];
        if kinds.iter().filter(|k| **k).count() != 1 {
            diags.push(
                path.clone(),
                "exactly one of constant, trace, random is required",
            );
            continue;
        }
        let demand = if let Some(c) = w.constant {
            Demand::Constant(nonnegative(c, &format!("{path}.constant"), "demand", diags))
        } else if let Some(trace) = &w.trace {
            let mut points = Vec::with_capacity(trace.len());
            for (j, (start, iops)) in trace.iter().enumerate() {
                let p = format!("{path}.trace[{j}]");
                if !(*start >= 0.0 && start.is_finite()) {
                    diags.push(&p, format!("start must be a nonnegative time, got {start}"));
                }
                if let Some((prev, _)) = points.last() {
                    if start <= prev {
                        diags.push(&p, format!("start {start} does not follow {prev}"));
                    }
                }
                points.push((*start, nonnegative(*iops, &p, "demand", diags)));
            }
            Demand::Trace(points)
        } else {
            let r = w.random.as_ref().expect("checked above");
            Demand::RandomWalk {
                seed: r.seed,
                mean: nonnegative(r.mean, &format!("{path}.random.mean"), "mean", diags),
                jitter: nonnegative(r.jitter, &format!("{path}.random.jitter"), "jitter", diags),
            }
        };
        out.push(WorkloadSpec { volume_id, demand });
    }
    out
}
