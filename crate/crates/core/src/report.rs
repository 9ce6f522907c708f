// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! End-of-run summary and storage-overhead accounting.
//!
//! Raw capacity is counted per implementation that hosts at least one
//! volume (its member disks are reserved whether or not bytes are written)
//! and split among the volumes on it in proportion to their sizes. Each
//! application's logical footprint is its stored bytes divided by the number
//! of copies the application keeps itself. An application's overhead is its
//! raw share over its logical bytes, and the total storage overhead is the
//! sum of the per-application multipliers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{DiskId, ImplId, LayoutKind, NodeId, RequestId, VolumeId};
use crate::scenario::Scenario;
use crate::scheduler::LatencyStats;
use crate::sim::{ControlPlane, EventKind, Outcome, SimEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub index: usize,
    pub request_id: RequestId,
    pub at: f64,
    pub op: String,
    pub volume_id: VolumeId,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplSummary {
    pub impl_id: ImplId,
    pub node_id: NodeId,
    pub layout: LayoutKind,
    pub disk_ids: Vec<DiskId>,
    pub volume_count: usize,
    pub raw_capacity: u64,
    pub usable_capacity: u64,
    pub allocated_capacity: u64,
    pub total_iops_budget: u64,
    pub allocated_iops: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationOverhead {
    pub name: String,
    pub copies: u32,
    pub stored_bytes: u64,
    pub logical_bytes: f64,
    pub raw_bytes: f64,
    pub overhead: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    /// Capacity of disks in implementations hosting at least one volume.
    pub raw_bytes: u64,
    pub stored_bytes: u64,
    pub logical_bytes: f64,
    /// `raw_bytes / logical_bytes`.
    pub overhead_ratio: Option<f64>,
    pub applications: Vec<ApplicationOverhead>,
    /// Sum of per-application overheads.
    pub total_storage_overhead: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub requests: Vec<RequestRecord>,
    pub accepted: usize,
    pub rejected: usize,
    pub failed: usize,
    pub implementations: Vec<ImplSummary>,
    pub provisioned: usize,
    pub reclaimed: Vec<ImplId>,
    pub free_disks: BTreeMap<NodeId, usize>,
    pub throttle_applied: usize,
    pub throttle_released: usize,
    #[serde(flatten)]
    pub overhead: OverheadReport,
    /// Wall-clock; the only field that varies between identical runs.
    pub decision_latency: Option<LatencyStats>,
}

pub(crate) fn build_summary(
    scenario: &Scenario,
    cp: &ControlPlane,
    requests: Vec<RequestRecord>,
    events: &[SimEvent],
) -> SummaryReport {
    let count = |f: fn(&Outcome) -> bool| {
        requests
            .iter()
            .filter(|r| r.op == "create" && f(&r.outcome))
            .count()
    };
    let accepted = count(|o| matches!(o, Outcome::Accepted { .. }));
    let rejected = count(|o| matches!(o, Outcome::Rejected { .. }));
    let failed = requests
        .iter()
        .filter(|r| matches!(r.outcome, Outcome::Failed { .. }))
        .count();

    let implementations = cp
        .managers()
        .values()
        .map(|m| {
            let imp = m.implementation();
            ImplSummary {
                impl_id: imp.impl_id.clone(),
                node_id: imp.node_id.clone(),
                layout: imp.layout,
                disk_ids: imp.disk_ids.clone(),
                volume_count: imp.volumes.len(),
                raw_capacity: imp.raw_capacity,
                usable_capacity: imp.usable_capacity(),
                allocated_capacity: imp.allocated_capacity(),
                total_iops_budget: imp.total_iops_budget(),
                allocated_iops: imp.allocated_iops(),
            }
        })
        .collect();

    let mut summary = SummaryReport {
        accepted,
        rejected,
        failed,
        implementations,
        free_disks: cp.free_disks(),
        overhead: overhead(scenario, cp),
        decision_latency: LatencyStats::from_samples(cp.decision_latencies()),
        requests,
        ..Default::default()
    };
    for e in events {
        match &e.kind {
            EventKind::Provisioned { .. } => summary.provisioned += 1,
            EventKind::GcReclaimed { impl_id, .. } => summary.reclaimed.push(impl_id.clone()),
            EventKind::ThrottleApplied { .. } => summary.throttle_applied += 1,
            EventKind::ThrottleReleased { .. } => summary.throttle_released += 1,
            _ => {}
        }
    }
    summary
}

fn overhead(scenario: &Scenario, cp: &ControlPlane) -> OverheadReport {
    let apps = scenario.applications_by_volume();
    let mut raw_bytes = 0u64;
    let mut per_app: BTreeMap<String, (u64, f64)> = BTreeMap::new();
    for m in cp.managers().values() {
        let imp = m.implementation();
        let stored: u64 = m.volumes().map(|v| v.size).sum();
        if stored == 0 {
            continue;
        }
        raw_bytes += imp.raw_capacity;
        for v in m.volumes() {
            let app = apps
                .get(&v.volume_id)
                .cloned()
                .unwrap_or_else(|| crate::scenario::DEFAULT_APPLICATION.to_owned());
            let entry = per_app.entry(app).or_default();
            entry.0 += v.size;
            entry.1 += imp.raw_capacity as f64 * v.size as f64 / stored as f64;
        }
    }

    let applications: Vec<ApplicationOverhead> = per_app
        .into_iter()
        .map(|(name, (stored_bytes, raw))| {
            let copies = scenario.applications.get(&name).copied().unwrap_or(1);
            let logical_bytes = stored_bytes as f64 / f64::from(copies);
            ApplicationOverhead {
                overhead: (logical_bytes > 0.0).then(|| raw / logical_bytes),
                name,
                copies,
                stored_bytes,
                logical_bytes,
                raw_bytes: raw,
            }
        })
        .collect();
    let stored_bytes = applications.iter().map(|a| a.stored_bytes).sum();
    let logical_bytes: f64 = applications.iter().map(|a| a.logical_bytes).sum();
    let total_storage_overhead = if applications.is_empty() {
        None
    } else {
        Some(applications.iter().filter_map(|a| a.overhead).sum())
    };
    OverheadReport {
        raw_bytes,
        stored_bytes,
        logical_bytes,
        overhead_ratio: (logical_bytes > 0.0).then(|| raw_bytes as f64 / logical_bytes),
        applications,
        total_storage_overhead,
    }
}
