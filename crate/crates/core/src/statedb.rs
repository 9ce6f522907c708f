// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Registry of the latest broker and manager reports.
//!
//! Writers are serialized; each mutation publishes a fresh immutable
//! [`ClusterSnapshot`]. Readers clone an `Arc` and never hold the lock while
//! they look at the data.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BudgetLedger, DiskId, DiskSpec, ImplId, LayoutKind, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrokerReport {
    pub node_id: NodeId,
    /// Unassigned disks only.
    pub free_disks: Vec<DiskSpec>,
    pub timestamp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManagerReport {
    pub impl_id: ImplId,
    pub node_id: NodeId,
    pub layout: LayoutKind,
    pub disk_ids: Vec<DiskId>,
    pub volume_count: usize,
    pub total_iops_budget: u64,
    pub allocated_iops: u64,
    pub usable_capacity: u64,
    pub allocated_capacity: u64,
    pub timestamp: f64,
}

impl ManagerReport {
    pub fn ledger(&self) -> BudgetLedger {
        BudgetLedger {
            total_iops_budget: self.total_iops_budget,
            allocated_iops: self.allocated_iops,
            usable_capacity: self.usable_capacity,
            allocated_capacity: self.allocated_capacity,
        }
    }

    pub fn remaining_iops(&self) -> u64 {
        self.total_iops_budget.saturating_sub(self.allocated_iops)
    }

    pub fn remaining_capacity(&self) -> u64 {
        self.usable_capacity.saturating_sub(self.allocated_capacity)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterSnapshot {
    pub brokers: BTreeMap<NodeId, BrokerReport>,
    pub managers: BTreeMap<ImplId, ManagerReport>,
    pub seq: u64,
}

impl ClusterSnapshot {
    /// Disks that are simultaneously free and assigned, if any.
    pub fn conflicting_disks(&self) -> Vec<(NodeId, DiskId)> {
        let mut out = Vec::new();
        for m in self.managers.values() {
            if let Some(b) = self.brokers.get(&m.node_id) {
                for d in &b.free_disks {
                    if m.disk_ids.contains(&d.disk_id) {
                        out.push((m.node_id.clone(), d.disk_id.clone()));
                    }
                }
            }
        }
        out
    }

    pub fn free_disk_count(&self, node: &NodeId) -> usize {
        self.brokers.get(node).map_or(0, |b| b.free_disks.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsistencyError {
    #[error("{0}: allocation exceeds totals")]
    OverAllocated(ImplId),
    #[error("{0}: implementation was reclaimed")]
    Reclaimed(ImplId),
    #[error("{0}: unknown implementation")]
    UnknownImpl(ImplId),
    #[error("disk {disk} of {impl_id} is listed free on {node}")]
    DiskConflict {
        impl_id: ImplId,
        node: NodeId,
        disk: DiskId,
    },
}

#[derive(Debug, Default)]
pub struct StateDb {
    published: RwLock<Arc<ClusterSnapshot>>,
    // Held for the whole of each mutation; guards the tombstone set too.
    writer: Mutex<BTreeSet<ImplId>>,
}

impl StateDb {
    pub fn new() -> Self {
        Self::default()
    }

    fn mutate<T>(
        &self,
        f: impl FnOnce(&mut ClusterSnapshot, &mut BTreeSet<ImplId>) -> Result<T, ConsistencyError>,
    ) -> Result<u64, ConsistencyError> {
        let mut tombstones = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let mut next = ClusterSnapshot::clone(&self.current());
        f(&mut next, &mut tombstones)?;
        next.seq += 1;
        let seq = next.seq;
        *self.published.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(next);
        Ok(seq)
    }

    fn current(&self) -> Arc<ClusterSnapshot> {
        Arc::clone(&self.published.read().unwrap_or_else(|e| e.into_inner()))
    }

    /// Replaces the node's report. Returns the new sequence number.
    pub fn upsert_broker_report(&self, report: BrokerReport) -> u64 {
        self.mutate(|snap, _| {
            snap.brokers.insert(report.node_id.clone(), report);
            Ok(())
        })
        .expect("broker upserts are infallible")
    }

    pub fn upsert_manager_report(&self, report: ManagerReport) -> Result<u64, ConsistencyError> {
        self.mutate(|snap, tombstones| {
            if tombstones.contains(&report.impl_id) {
                return Err(ConsistencyError::Reclaimed(report.impl_id));
            }
            if !report.ledger().is_consistent() {
                return Err(ConsistencyError::OverAllocated(report.impl_id));
            }
            if let Some(b) = snap.brokers.get(&report.node_id) {
                if let Some(d) = b
                    .free_disks
                    .iter()
                    .find(|d| report.disk_ids.contains(&d.disk_id))
                {
                    return Err(ConsistencyError::DiskConflict {
                        impl_id: report.impl_id,
                        node: report.node_id,
                        disk: d.disk_id.clone(),
                    });
                }
            }
            snap.managers.insert(report.impl_id.clone(), report);
            Ok(())
        })
    }

    /// Drops a reclaimed implementation. Later reports for it are refused.
    pub fn remove_manager(&self, impl_id: &ImplId) -> Result<u64, ConsistencyError> {
        self.mutate(|snap, tombstones| {
            if snap.managers.remove(impl_id).is_none() {
                return Err(ConsistencyError::UnknownImpl(impl_id.clone()));
            }
            tombstones.insert(impl_id.clone());
            Ok(())
        })
    }

    /// Point-in-time copy, unaffected by later writes.
    pub fn snapshot(&self) -> ClusterSnapshot {
        ClusterSnapshot::clone(&self.current())
    }

    /// Shared handle to the current snapshot without copying it.
    pub fn snapshot_arc(&self) -> Arc<ClusterSnapshot> {
        self.current()
    }

    pub fn seq(&self) -> u64 {
        self.current().seq
    }
}
