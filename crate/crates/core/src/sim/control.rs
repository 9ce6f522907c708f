// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! The assembled control plane: state database, one broker per node and one
//! manager per implementation, driven request by request.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::event::EventKind;
use crate::broker::{Broker, BrokerError, ManagerSet, ProvisionOrder};
use crate::manager::{Admission, Manager};
use crate::model::{
    ControlConfig, ImplId, InstanceId, LayoutKind, NodeId, RejectReason, RequestId, StorageNode,
    VolumeId,
};
use crate::scheduler::{schedule_with, PlacementPolicy, ScheduleDecision, VolumeRequest};
use crate::statedb::StateDb;

/// Scheduling attempts per create: the first plus one retry on a stale snapshot.
const SCHEDULE_ATTEMPTS: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Accepted { impl_id: ImplId },
    Rejected { reason: RejectReason },
    Completed,
    Failed { error: String },
}

#[derive(Debug)]
pub struct ControlPlane {
    db: Arc<StateDb>,
    brokers: BTreeMap<NodeId, Broker>,
    managers: ManagerSet,
    policy: PlacementPolicy,
    locations: BTreeMap<VolumeId, ImplId>,
    decision_latencies: Vec<f64>,
}

impl ControlPlane {
    pub fn new(nodes: Vec<StorageNode>, policy: PlacementPolicy, now: f64) -> Self {
        let db = Arc::new(StateDb::new());
        let brokers = nodes
            .into_iter()
            .map(|n| (n.node_id.clone(), Broker::new(n, Arc::clone(&db), now)))
            .collect();
        Self {
            db,
            brokers,
            managers: ManagerSet::new(),
            policy,
            locations: BTreeMap::new(),
            decision_latencies: Vec::new(),
        }
    }

    pub fn db(&self) -> &Arc<StateDb> {
        &self.db
    }

    pub fn managers(&self) -> &ManagerSet {
        &self.managers
    }

    pub fn managers_mut(&mut self) -> &mut ManagerSet {
        &mut self.managers
    }

    pub fn brokers(&self) -> &BTreeMap<NodeId, Broker> {
        &self.brokers
    }

    pub fn decision_latencies(&self) -> &[f64] {
        &self.decision_latencies
    }

    pub fn free_disks(&self) -> BTreeMap<NodeId, usize> {
        self.brokers
            .iter()
            .map(|(id, b)| (id.clone(), b.free_disk_count()))
            .collect()
    }

    pub fn location(&self, volume: &VolumeId) -> Option<&ImplId> {
        self.locations.get(volume)
    }

    fn provision(
        &mut self,
        node_id: &NodeId,
        layout: LayoutKind,
        disk_ids: Vec<crate::model::DiskId>,
        now: f64,
    ) -> Result<(ImplId, EventKind), BrokerError> {
        let broker = self
            .brokers
            .get_mut(node_id)
            .ok_or_else(|| BrokerError::WrongNode {
                order: node_id.clone(),
                broker: NodeId::new("<none>"),
            })?;
        let order = ProvisionOrder::new(broker.node(), layout, disk_ids)?;
        let impl_id = broker.provision(&order, now, self.policy, &mut self.managers)?;
        let imp = self.managers[&impl_id].implementation();
        let event = EventKind::Provisioned {
            impl_id: impl_id.clone(),
            node_id: imp.node_id.clone(),
            layout: imp.layout,
            disk_ids: imp.disk_ids.clone(),
            usable_capacity: imp.usable_capacity(),
            total_iops_budget: imp.total_iops_budget(),
        };
        Ok((impl_id, event))
    }

    /// Carves every node's free disks into as many `layout` implementations as fit.
    pub fn preprovision(&mut self, layout: LayoutKind, now: f64) -> Vec<EventKind> {
        let mut events = Vec::new();
        let n = layout.disks_required();
        let nodes: Vec<NodeId> = self.brokers.keys().cloned().collect();
        for node in nodes {
            loop {
                let free: Vec<_> = self.brokers[&node]
                    .node()
                    .free_disk_ids
                    .iter()
                    .take(n)
                    .cloned()
                    .collect();
                if free.len() < n {
                    break;
                }
                match self.provision(&node, layout, free, now) {
                    Ok((_, e)) => events.push(e),
                    Err(err) => {
                        log::warn!("pre-provisioning {layout} on {node}: {err}");
                        break;
                    }
                }
            }
        }
        events
    }

    fn admit_on(
        &mut self,
        impl_id: &ImplId,
        request: &VolumeRequest,
        now: f64,
        events: &mut Vec<EventKind>,
    ) -> Result<Option<RejectReason>, String> {
        let Some(manager) = self.managers.get_mut(impl_id) else {
            return Ok(Some(RejectReason::NoLayoutMatch));
        };
        match manager.admit(request, now).map_err(|e| e.to_string())? {
            Admission::Accepted(volume_id) => {
                let ledger = manager.implementation().ledger;
                events.push(EventKind::Admitted {
                    request_id: request.request_id.clone(),
                    volume_id: volume_id.clone(),
                    impl_id: impl_id.clone(),
                    min_iops: request.volume_type.min_iops,
                    allocated_iops: ledger.allocated_iops,
                    total_iops_budget: ledger.total_iops_budget,
                });
                self.locations.insert(volume_id, impl_id.clone());
                Ok(None)
            }
            Admission::Rejected(reason) => Ok(Some(reason)),
        }
    }

    /// Schedules, provisions if needed and admits. Retries once when the
    /// snapshot the decision relied on turns out stale.
    pub fn create_volume(
        &mut self,
        request: &VolumeRequest,
        now: f64,
    ) -> (Outcome, Vec<EventKind>) {
        let mut events = Vec::new();
        if self.locations.contains_key(&request.volume_id) {
            let error = format!("volume {} already exists", request.volume_id);
            events.push(EventKind::RequestFailed {
                request_id: request.request_id.clone(),
                volume_id: request.volume_id.clone(),
                error: error.clone(),
            });
            return (Outcome::Failed { error }, events);
        }
        let mut last_reason = RejectReason::NoLayoutMatch;
        for attempt in 0..SCHEDULE_ATTEMPTS {
            let snapshot = self.db.snapshot_arc();
            let start = Instant::now();
            let decision = schedule_with(request, &snapshot, self.policy);
            self.decision_latencies.push(start.elapsed().as_secs_f64());
            events.push(EventKind::Scheduled {
                request_id: request.request_id.clone(),
                attempt,
                decision: decision.clone(),
            });
            let target = match decision {
                ScheduleDecision::Reject { reason } => {
                    last_reason = reason;
                    break;
                }
                ScheduleDecision::UseExisting { impl_id } => impl_id,
                ScheduleDecision::Provision {
                    node_id,
                    layout,
                    disk_ids,
                    ..
                } => match self.provision(&node_id, layout, disk_ids, now) {
                    Ok((impl_id, e)) => {
                        events.push(e);
                        impl_id
                    }
                    Err(BrokerError::Conflict { .. }) => {
                        last_reason = RejectReason::NoRawDisks;
                        continue;
                    }
                    Err(e) => return self.failed(request, e.to_string(), events),
                },
            };
            match self.admit_on(&target, request, now, &mut events) {
                Ok(None) => return (Outcome::Accepted { impl_id: target }, events),
                Ok(Some(reason)) => last_reason = reason,
                Err(error) => return self.failed(request, error, events),
            }
        }
        events.push(EventKind::Rejected {
            request_id: request.request_id.clone(),
            volume_id: request.volume_id.clone(),
            reason: last_reason,
        });
        (
            Outcome::Rejected {
                reason: last_reason,
            },
            events,
        )
    }

    fn failed(
        &self,
        request: &VolumeRequest,
        error: String,
        mut events: Vec<EventKind>,
    ) -> (Outcome, Vec<EventKind>) {
        events.push(EventKind::RequestFailed {
            request_id: request.request_id.clone(),
            volume_id: request.volume_id.clone(),
            error: error.clone(),
        });
        (Outcome::Failed { error }, events)
    }

    fn manager_of(&mut self, volume: &VolumeId) -> Result<&mut Manager, String> {
        let impl_id = self
            .locations
            .get(volume)
            .ok_or_else(|| format!("volume {volume} not found"))?;
        self.managers
            .get_mut(impl_id)
            .ok_or_else(|| format!("implementation {impl_id} of {volume} is gone"))
    }

    fn lifecycle(
        &mut self,
        request_id: &RequestId,
        volume: &VolumeId,
        f: impl FnOnce(&mut Self) -> Result<EventKind, String>,
    ) -> (Outcome, Vec<EventKind>) {
        match f(self) {
            Ok(e) => (Outcome::Completed, vec![e]),
            Err(error) => (
                Outcome::Failed {
                    error: error.clone(),
                },
                vec![EventKind::RequestFailed {
                    request_id: request_id.clone(),
                    volume_id: volume.clone(),
                    error,
                }],
            ),
        }
    }

    pub fn delete_volume(
        &mut self,
        request_id: &RequestId,
        volume: &VolumeId,
        now: f64,
    ) -> (Outcome, Vec<EventKind>) {
        self.lifecycle(request_id, volume, |cp| {
            let m = cp.manager_of(volume)?;
            m.delete_volume(volume, now).map_err(|e| e.to_string())?;
            let impl_id = m.impl_id().clone();
            cp.locations.remove(volume);
            Ok(EventKind::VolumeDeleted {
                request_id: request_id.clone(),
                volume_id: volume.clone(),
                impl_id,
            })
        })
    }

    pub fn attach(
        &mut self,
        request_id: &RequestId,
        volume: &VolumeId,
        instance: &InstanceId,
    ) -> (Outcome, Vec<EventKind>) {
        self.lifecycle(request_id, volume, |cp| {
            cp.manager_of(volume)?
                .attach(volume, instance.clone())
                .map_err(|e| e.to_string())?;
            Ok(EventKind::VolumeAttached {
                request_id: request_id.clone(),
                volume_id: volume.clone(),
                instance: instance.clone(),
            })
        })
    }

    pub fn detach(
        &mut self,
        request_id: &RequestId,
        volume: &VolumeId,
    ) -> (Outcome, Vec<EventKind>) {
        self.lifecycle(request_id, volume, |cp| {
            let instance = cp
                .manager_of(volume)?
                .detach(volume)
                .map_err(|e| e.to_string())?;
            Ok(EventKind::VolumeDetached {
                request_id: request_id.clone(),
                volume_id: volume.clone(),
                instance,
            })
        })
    }

    /// Runs every broker's collector; one event per reclaimed implementation.
    pub fn garbage_collect(&mut self, now: f64, config: &ControlConfig) -> Vec<EventKind> {
        let mut events = Vec::new();
        for broker in self.brokers.values_mut() {
            let disks: BTreeMap<ImplId, Vec<_>> = self
                .managers
                .values()
                .filter(|m| m.implementation().node_id == *broker.node_id())
                .map(|m| (m.impl_id().clone(), m.implementation().disk_ids.clone()))
                .collect();
            for impl_id in broker.garbage_collect(now, config, &mut self.managers) {
                events.push(EventKind::GcReclaimed {
                    node_id: broker.node_id().clone(),
                    disk_ids: disks.get(&impl_id).cloned().unwrap_or_default(),
                    impl_id,
                });
            }
        }
        events
    }
}
