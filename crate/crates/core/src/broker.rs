// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Per-node broker: builds implementations out of raw disks and reclaims the
//! ones that have been empty for long enough.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manager::{Manager, ManagerError};
use crate::model::{
    iops_budget, usable_capacity, BudgetLedger, ControlConfig, DiskId, ImplId, LayoutError,
    LayoutKind, NodeId, StorageImplementation, StorageNode,
};
use crate::scheduler::PlacementPolicy;
use crate::statedb::{BrokerReport, StateDb};

/// Live managers keyed by implementation.
pub type ManagerSet = BTreeMap<ImplId, Manager>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrokerError {
    #[error("disk {disk} on {node} is already assigned")]
    Conflict { node: NodeId, disk: DiskId },
    #[error("disk {disk} does not exist on {node}")]
    UnknownDisk { node: NodeId, disk: DiskId },
    #[error("order for {order} sent to broker of {broker}")]
    WrongNode { order: NodeId, broker: NodeId },
    #[error("disk {0} listed twice in order")]
    DuplicateDisk(DiskId),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Manager(#[from] ManagerError),
}

/// Instructions for building one implementation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvisionOrder {
    pub node_id: NodeId,
    pub layout: LayoutKind,
    pub disk_ids: Vec<DiskId>,
    /// Profiled budget handed to the new manager.
    pub total_iops_budget: u64,
}

impl ProvisionOrder {
    /// Order over the given disks with the budget computed from their profiles.
    pub fn new(
        node: &StorageNode,
        layout: LayoutKind,
        disk_ids: Vec<DiskId>,
    ) -> Result<Self, BrokerError> {
        let disks = disk_ids
            .iter()
            .map(|id| {
                node.disk(id)
                    .cloned()
                    .ok_or_else(|| BrokerError::UnknownDisk {
                        node: node.node_id.clone(),
                        disk: id.clone(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let total_iops_budget = iops_budget(&layout, &disks)?;
        Ok(Self {
            node_id: node.node_id.clone(),
            layout,
            disk_ids,
            total_iops_budget,
        })
    }
}

#[derive(Debug)]
pub struct Broker {
    node: StorageNode,
    db: Arc<StateDb>,
    next_seq: u64,
}

impl Broker {
    /// Takes ownership of the node's inventory and publishes its first report.
    pub fn new(node: StorageNode, db: Arc<StateDb>, now: f64) -> Self {
        let broker = Self {
            node,
            db,
            next_seq: 1,
        };
        broker.publish(now);
        broker
    }

    pub fn node(&self) -> &StorageNode {
        &self.node
    }

    pub fn node_id(&self) -> &NodeId {
        &self.node.node_id
    }

    pub fn free_disk_count(&self) -> usize {
        self.node.free_disk_ids.len()
    }

    fn publish(&self, now: f64) -> u64 {
        self.db.upsert_broker_report(BrokerReport {
            node_id: self.node.node_id.clone(),
            free_disks: self.node.free_disks(),
            timestamp: now,
        })
    }

    /// Builds an implementation and registers its manager in `managers`.
    ///
    /// Nothing changes unless every disk of the order is free and the count
    /// fits the layout.
    pub fn provision(
        &mut self,
        order: &ProvisionOrder,
        now: f64,
        policy: PlacementPolicy,
        managers: &mut ManagerSet,
    ) -> Result<ImplId, BrokerError> {
        if order.node_id != self.node.node_id {
            return Err(BrokerError::WrongNode {
                order: order.node_id.clone(),
                broker: self.node.node_id.clone(),
            });
        }
        let mut seen = BTreeSet::new();
        let mut disks = Vec::with_capacity(order.disk_ids.len());
        for id in &order.disk_ids {
            if !seen.insert(id) {
                return Err(BrokerError::DuplicateDisk(id.clone()));
            }
            let disk = self.node.disk(id).ok_or_else(|| BrokerError::UnknownDisk {
                node: self.node.node_id.clone(),
                disk: id.clone(),
            })?;
            if !self.node.free_disk_ids.contains(id) {
                return Err(BrokerError::Conflict {
                    node: self.node.node_id.clone(),
                    disk: id.clone(),
                });
            }
            disks.push(disk.clone());
        }
        let usable = usable_capacity(&order.layout, &disks)?;

        let impl_id = loop {
            let id = ImplId::new(format!("{}-impl-{:04}", self.node.node_id, self.next_seq));
            self.next_seq += 1;
            if !managers.contains_key(&id) {
                break id;
            }
        };
        let implementation = StorageImplementation {
            impl_id: impl_id.clone(),
            node_id: self.node.node_id.clone(),
            layout: order.layout,
            disk_ids: order.disk_ids.clone(),
            raw_capacity: disks.iter().map(|d| d.capacity).sum(),
            ledger: BudgetLedger::new(order.total_iops_budget, usable),
            volumes: BTreeSet::new(),
            idle_since: Some(now),
        };
        for id in &order.disk_ids {
            self.node.free_disk_ids.remove(id);
        }
        // Free list first so the snapshot never shows a disk on both sides.
        self.publish(now);
        let manager = Manager::new(implementation, policy, Arc::clone(&self.db));
        if let Err(e) = manager.publish(now) {
            self.node
                .free_disk_ids
                .extend(order.disk_ids.iter().cloned());
            self.publish(now);
            return Err(e.into());
        }
        info!(
            "provisioned {impl_id} ({}) on {} budget {} usable {}",
            order.layout, self.node.node_id, order.total_iops_budget, usable
        );
        managers.insert(impl_id.clone(), manager);
        Ok(impl_id)
    }

    /// Destroys this node's implementations that have held no volumes for at
    /// least the configured dwell.
    pub fn garbage_collect(
        &mut self,
        now: f64,
        config: &ControlConfig,
        managers: &mut ManagerSet,
    ) -> Vec<ImplId> {
        let due: Vec<ImplId> = managers
            .values()
            .filter(|m| m.implementation().node_id == self.node.node_id && m.is_idle())
            .filter(|m| {
                m.implementation()
                    .idle_since
                    .is_some_and(|t| now - t >= config.gc_dwell_s)
            })
            .map(|m| m.impl_id().clone())
            .collect();
        for id in &due {
            let m = managers.remove(id).expect("collected above");
            let imp = m.implementation();
            if let Err(e) = self.db.remove_manager(id) {
                log::warn!("reclaiming {id}: {e}");
            }
            self.node.free_disk_ids.extend(imp.disk_ids.iter().cloned());
            if imp.layout.is_pool() {
                info!(
                    "reclaimed pool {id} ({}); data rebalancing requested",
                    imp.layout
                );
            } else {
                info!("reclaimed {id} ({})", imp.layout);
            }
        }
        if !due.is_empty() {
            self.publish(now);
        }
        due
    }
}
