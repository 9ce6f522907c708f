// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Placement: route a volume request to an existing implementation, or ask a
//! broker to build a new one, or reject.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    iops_budget, usable_capacity, DiskId, DiskSpec, ImplId, LayoutKind, Medium, NodeId,
    RejectReason, RequestId, VolumeId, VolumeType,
};
use crate::statedb::{BrokerReport, ClusterSnapshot, ManagerReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeRequest {
    pub request_id: RequestId,
    /// Name the volume will carry once created.
    pub volume_id: VolumeId,
    pub volume_type: VolumeType,
    pub size: u64,
    pub submitted_at: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleDecision {
    UseExisting {
        impl_id: ImplId,
    },
    Provision {
        node_id: NodeId,
        layout: LayoutKind,
        disk_count: usize,
        /// Lexicographically smallest free disks on the node.
        disk_ids: Vec<DiskId>,
    },
    Reject {
        reason: RejectReason,
    },
}

/// Which existing implementations a request may land on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementPolicy {
    /// Exact layout match; new implementations are built on demand.
    #[default]
    LateBinding,
    /// Pre-provisioned implementations only, admissible when their fault
    /// tolerance is at least the requested one.
    Static,
}

impl PlacementPolicy {
    pub fn layout_admissible(&self, offered: &LayoutKind, requested: &LayoutKind) -> bool {
        match self {
            PlacementPolicy::LateBinding => offered == requested,
            PlacementPolicy::Static => offered.fault_tolerance() >= requested.fault_tolerance(),
        }
    }
}

/// Late-binding placement decision.
pub fn schedule(request: &VolumeRequest, snapshot: &ClusterSnapshot) -> ScheduleDecision {
    schedule_with(request, snapshot, PlacementPolicy::LateBinding)
}

pub fn schedule_with(
    request: &VolumeRequest,
    snapshot: &ClusterSnapshot,
    policy: PlacementPolicy,
) -> ScheduleDecision {
    let want = &request.volume_type;
    let mut budget_short = false;
    let mut capacity_short = false;
    let mut any_match = false;

    let mut best: Option<&ManagerReport> = None;
    for m in snapshot.managers.values() {
        if !policy.layout_admissible(&m.layout, &want.layout) {
            continue;
        }
        any_match = true;
        if m.remaining_iops() < want.min_iops {
            budget_short = true;
            continue;
        }
        if m.remaining_capacity() < request.size {
            capacity_short = true;
            continue;
        }
        // BTreeMap order makes the first of equal budgets the smallest id.
        if best.is_none_or(|b| m.remaining_iops() > b.remaining_iops()) {
            best = Some(m);
        }
    }
    if let Some(m) = best {
        return ScheduleDecision::UseExisting {
            impl_id: m.impl_id.clone(),
        };
    }

    let mut any_host = false;
    if policy == PlacementPolicy::LateBinding {
        let needed = want.layout.disks_required();
        let mut pick: Option<(&BrokerReport, Vec<DiskSpec>)> = None;
        for b in snapshot.brokers.values() {
            if b.free_disks.len() < needed {
                continue;
            }
            any_host = true;
            let disks = smallest_disks(&b.free_disks, needed);
            let budget = iops_budget(&want.layout, &disks).unwrap_or(0);
            let capacity = usable_capacity(&want.layout, &disks).unwrap_or(0);
            if budget < want.min_iops {
                budget_short = true;
                continue;
            }
            if capacity < request.size {
                capacity_short = true;
                continue;
            }
            if pick
                .as_ref()
                .is_none_or(|(p, _)| b.free_disks.len() > p.free_disks.len())
            {
                pick = Some((b, disks));
            }
        }
        if let Some((b, disks)) = pick {
            return ScheduleDecision::Provision {
                node_id: b.node_id.clone(),
                layout: want.layout,
                disk_count: disks.len(),
                disk_ids: disks.into_iter().map(|d| d.disk_id).collect(),
            };
        }
    }

    let reason = if budget_short {
        RejectReason::NoIopsBudget
    } else if capacity_short {
        RejectReason::NoCapacity
    } else if policy == PlacementPolicy::LateBinding && !any_host {
        RejectReason::NoRawDisks
    } else {
        debug_assert!(!any_match || policy == PlacementPolicy::Static);
        RejectReason::NoLayoutMatch
    };
    ScheduleDecision::Reject { reason }
}

fn smallest_disks(free: &[DiskSpec], n: usize) -> Vec<DiskSpec> {
    let mut sorted: Vec<&DiskSpec> = free.iter().collect();
    sorted.sort_by(|a, b| a.disk_id.cmp(&b.disk_id));
    sorted.into_iter().take(n).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub samples: usize,
    pub min_s: f64,
    pub median_s: f64,
    pub p99_s: f64,
    pub max_s: f64,
}

impl LatencyStats {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = |q: f64| {
            let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
            sorted[idx]
        };
        Some(Self {
            samples: sorted.len(),
            min_s: sorted[0],
            median_s: rank(0.5),
            p99_s: rank(0.99),
            max_s: sorted[sorted.len() - 1],
        })
    }
}

/// Wall-clock time of one `schedule` call per request. `None` for an empty batch.
pub fn measure_decision_latency(
    requests: &[VolumeRequest],
    snapshot: &ClusterSnapshot,
) -> Option<LatencyStats> {
    let samples: Vec<f64> = requests
        .iter()
        .map(|r| {
            let start = Instant::now();
            let decision = schedule(r, snapshot);
            let elapsed = start.elapsed().as_secs_f64();
            std::hint::black_box(decision);
            // Instant is monotone but may not tick between two reads.
            elapsed.max(f64::MIN_POSITIVE)
        })
        .collect();
    LatencyStats::from_samples(&samples)
}

/// A seeded cluster snapshot for benchmarking placement.
pub fn synthetic_snapshot(nodes: usize, implementations: usize, seed: u64) -> ClusterSnapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layouts = [
        LayoutKind::Jbod,
        LayoutKind::Raid {
            width: 4,
            parity_count: 2,
        },
        LayoutKind::Raid {
            width: 10,
            parity_count: 1,
        },
        LayoutKind::ReplicatedPool { replicas: 3 },
        LayoutKind::ErasureCodedPool { k: 6, m: 3 },
    ];
    let mut snap = ClusterSnapshot::default();
    for n in 0..nodes {
        let node_id = NodeId::new(format!("node{n:04}"));
        let free = rng.random_range(0..24);
        let free_disks = (0..free)
            .map(|d| {
                DiskSpec::new(
                    format!("{node_id}-d{d:02}"),
                    1_000_000_000_000,
                    Medium::Hdd,
                    200,
                )
            })
            .collect();
        snap.brokers.insert(
            node_id.clone(),
            BrokerReport {
                node_id,
                free_disks,
                timestamp: 0.0,
            },
        );
    }
    for i in 0..implementations {
        let layout = layouts[rng.random_range(0..layouts.len())];
        let n = layout.disks_required() as u64;
        let total = 200 * n;
        let allocated = rng.random_range(0..=total);
        let usable = 1_000_000_000_000 * n;
        let impl_id = ImplId::new(format!("impl{i:04}"));
        snap.managers.insert(
            impl_id.clone(),
            ManagerReport {
                impl_id,
                node_id: NodeId::new(format!("node{:04}", rng.random_range(0..nodes.max(1)))),
                layout,
                disk_ids: Vec::new(),
                volume_count: rng.random_range(0..10),
                total_iops_budget: total,
                allocated_iops: allocated,
                usable_capacity: usable,
                allocated_capacity: rng.random_range(0..=usable),
                timestamp: 0.0,
            },
        );
    }
    snap.seq = (nodes + implementations) as u64;
    snap
}
