// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{
    DiskId, ImplId, InstanceId, LayoutKind, NodeId, RejectReason, RequestId, VolumeId,
};
use crate::scheduler::ScheduleDecision;

/// One line of the event log. Totally ordered by `(time_s, seq)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub seq: u64,
    pub time_s: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventKind {
    RequestArrived {
        request_id: RequestId,
        op: String,
        volume_id: VolumeId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        volume_type: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        size: Option<u64>,
    },
    Scheduled {
        request_id: RequestId,
        attempt: u32,
        decision: ScheduleDecision,
    },
    Provisioned {
        impl_id: ImplId,
        node_id: NodeId,
        layout: LayoutKind,
        disk_ids: Vec<DiskId>,
        usable_capacity: u64,
        total_iops_budget: u64,
    },
    Admitted {
        request_id: RequestId,
        volume_id: VolumeId,
        impl_id: ImplId,
        min_iops: u64,
        allocated_iops: u64,
        total_iops_budget: u64,
    },
    #[serde(rename = "RejectedEvent")]
    Rejected {
        request_id: RequestId,
        volume_id: VolumeId,
        reason: RejectReason,
    },
    VolumeDeleted {
        request_id: RequestId,
        volume_id: VolumeId,
        impl_id: ImplId,
    },
    VolumeAttached {
        request_id: RequestId,
        volume_id: VolumeId,
        instance: InstanceId,
    },
    VolumeDetached {
        request_id: RequestId,
        volume_id: VolumeId,
        instance: InstanceId,
    },
    /// A lifecycle request the control plane refused (unknown or attached volume).
    RequestFailed {
        request_id: RequestId,
        volume_id: VolumeId,
        error: String,
    },
    ThrottleApplied {
        impl_id: ImplId,
        caps: BTreeMap<VolumeId, u64>,
        violators: Vec<VolumeId>,
    },
    ThrottleReleased {
        impl_id: ImplId,
    },
    GcReclaimed {
        impl_id: ImplId,
        node_id: NodeId,
        disk_ids: Vec<DiskId>,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::RequestArrived { .. } => "RequestArrived",
            EventKind::Scheduled { .. } => "Scheduled",
            EventKind::Provisioned { .. } => "Provisioned",
            EventKind::Admitted { .. } => "Admitted",
            EventKind::Rejected { .. } => "RejectedEvent",
            EventKind::VolumeDeleted { .. } => "VolumeDeleted",
            EventKind::VolumeAttached { .. } => "VolumeAttached",
            EventKind::VolumeDetached { .. } => "VolumeDetached",
            EventKind::RequestFailed { .. } => "RequestFailed",
            EventKind::ThrottleApplied { .. } => "ThrottleApplied",
            EventKind::ThrottleReleased { .. } => "ThrottleReleased",
            EventKind::GcReclaimed { .. } => "GcReclaimed",
        }
    }
}
