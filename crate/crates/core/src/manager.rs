// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Per-implementation volume lifecycle, admission ledger and the periodic
//! throttling controller.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    ControlConfig, ImplId, InstanceId, LayoutKind, RejectReason, StorageImplementation, Volume,
    VolumeId,
};
use crate::scheduler::{PlacementPolicy, VolumeRequest};
use crate::sim::allocate_iops;
use crate::statedb::{ConsistencyError, ManagerReport, StateDb};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManagerError {
    #[error("{impl_id} ({offered}) cannot host a {requested} volume")]
    Layout {
        impl_id: ImplId,
        offered: LayoutKind,
        requested: LayoutKind,
    },
    #[error("volume {0} not found")]
    NotFound(VolumeId),
    #[error("volume {0} already exists")]
    AlreadyExists(VolumeId),
    #[error("volume {volume}: {reason}")]
    InvalidState {
        volume: VolumeId,
        reason: &'static str,
    },
    #[error("volume size must be positive")]
    ZeroSize,
    #[error("interval stats do not match volumes: {0}")]
    Input(String),
    #[error(transparent)]
    Report(#[from] ConsistencyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Admission {
    Accepted(VolumeId),
    Rejected(RejectReason),
}

/// Observations for one control interval.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntervalStats {
    /// Achieved IOPS per volume.
    pub current: BTreeMap<VolumeId, u64>,
    /// IOPS each volume tried to issue, when the monitor can see it.
    pub offered: Option<BTreeMap<VolumeId, u64>>,
}

impl IntervalStats {
    pub fn new(current: BTreeMap<VolumeId, u64>) -> Self {
        Self {
            current,
            offered: None,
        }
    }

    pub fn with_offered(mut self, offered: BTreeMap<VolumeId, u64>) -> Self {
        self.offered = Some(offered);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThrottleState {
    pub active: bool,
    pub caps: BTreeMap<VolumeId, u64>,
    /// Aggregate throughput seen while a reserved volume was starved, i.e. the
    /// saturated capacity of the implementation.
    pub contended_iops: Option<u64>,
}

/// One evaluation of the throttling controller.
///
/// A volume violates when it has a reservation and achieved less than it.
/// While any volume violates, every other volume is capped at
/// `max(reservation, floor)` and violators run uncapped. With no violators
/// the caps are released, unless offered load is known and replaying it
/// uncapped over the last saturated capacity would starve a reserved volume
/// again; then the current caps are held.
pub fn throttle_tick(
    stats: &IntervalStats,
    volumes: &[Volume],
    state: &ThrottleState,
    config: &ControlConfig,
) -> Result<ThrottleState, ManagerError> {
    let ids: BTreeSet<&VolumeId> = volumes.iter().map(|v| &v.volume_id).collect();
    if ids.len() != volumes.len() {
        return Err(ManagerError::Input("duplicate volume".into()));
    }
    let check_keys = |m: &BTreeMap<VolumeId, u64>, what: &str| {
        if m.len() != ids.len() || !m.keys().all(|k| ids.contains(k)) {
            Err(ManagerError::Input(format!(
                "{what} keys differ from the volume set"
            )))
        } else {
            Ok(())
        }
    };
    check_keys(&stats.current, "current")?;
    if let Some(offered) = &stats.offered {
        check_keys(offered, "offered")?;
    }

    let current = |v: &Volume| stats.current[&v.volume_id];
    let violators: BTreeSet<&VolumeId> = volumes
        .iter()
        .filter(|v| v.min_iops > 0 && current(v) < v.min_iops)
        .map(|v| &v.volume_id)
        .collect();

    if !violators.is_empty() {
        let caps: BTreeMap<VolumeId, u64> = volumes
            .iter()
            .filter(|v| !violators.contains(&v.volume_id))
            .map(|v| {
                (
                    v.volume_id.clone(),
                    v.min_iops.max(config.throttle_floor_iops),
                )
            })
            .collect();
        let starved = stats.offered.as_ref().is_some_and(|offered| {
            volumes
                .iter()
                .any(|v| violators.contains(&v.volume_id) && offered[&v.volume_id] > current(v))
        });
        let contended_iops = if starved {
            Some(stats.current.values().sum())
        } else {
            state.contended_iops
        };
        return Ok(ThrottleState {
            active: !caps.is_empty(),
            caps,
            contended_iops,
        });
    }

    if state.active {
        if let (Some(offered), Some(capacity)) = (&stats.offered, state.contended_iops) {
            let predicted = allocate_iops(offered, &BTreeMap::new(), capacity);
            let would_starve = volumes.iter().any(|v| {
                v.min_iops > 0 && predicted[&v.volume_id] < v.min_iops.min(offered[&v.volume_id])
            });
            if would_starve {
                let caps: BTreeMap<VolumeId, u64> = state
                    .caps
                    .iter()
                    .filter(|(id, _)| ids.contains(id))
                    .map(|(id, cap)| (id.clone(), *cap))
                    .collect();
                return Ok(ThrottleState {
                    active: !caps.is_empty(),
                    caps,
                    contended_iops: state.contended_iops,
                });
            }
        }
    }
    Ok(ThrottleState::default())
}

/// What a controller tick changed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThrottleTransition {
    Unchanged,
    Applied(BTreeMap<VolumeId, u64>),
    Released,
}

/// Control path for one storage implementation.
#[derive(Debug)]
pub struct Manager {
    implementation: StorageImplementation,
    volumes: BTreeMap<VolumeId, Volume>,
    throttle: ThrottleState,
    policy: PlacementPolicy,
    db: Arc<StateDb>,
}

impl Manager {
    pub fn new(
        implementation: StorageImplementation,
        policy: PlacementPolicy,
        db: Arc<StateDb>,
    ) -> Self {
        Self {
            implementation,
            volumes: BTreeMap::new(),
            throttle: ThrottleState::default(),
            policy,
            db,
        }
    }

    pub fn impl_id(&self) -> &ImplId {
        &self.implementation.impl_id
    }

    pub fn implementation(&self) -> &StorageImplementation {
        &self.implementation
    }

    pub fn volumes(&self) -> impl Iterator<Item = &Volume> {
        self.volumes.values()
    }

    pub fn volume(&self, id: &VolumeId) -> Option<&Volume> {
        self.volumes.get(id)
    }

    pub fn throttle_state(&self) -> &ThrottleState {
        &self.throttle
    }

    pub fn is_idle(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn report_at(&self, now: f64) -> ManagerReport {
        let imp = &self.implementation;
        ManagerReport {
            impl_id: imp.impl_id.clone(),
            node_id: imp.node_id.clone(),
            layout: imp.layout,
            disk_ids: imp.disk_ids.clone(),
            volume_count: self.volumes.len(),
            total_iops_budget: imp.ledger.total_iops_budget,
            allocated_iops: imp.ledger.allocated_iops,
            usable_capacity: imp.ledger.usable_capacity,
            allocated_capacity: imp.ledger.allocated_capacity,
            timestamp: now,
        }
    }

    /// Current ledger as a report, stamped with the idle time or zero.
    pub fn report(&self) -> ManagerReport {
        self.report_at(self.implementation.idle_since.unwrap_or(0.0))
    }

    pub fn publish(&self, now: f64) -> Result<u64, ManagerError> {
        Ok(self.db.upsert_manager_report(self.report_at(now))?)
    }

    pub fn admit(&mut self, request: &VolumeRequest, now: f64) -> Result<Admission, ManagerError> {
        let requested = request.volume_type.layout;
        if !self
            .policy
            .layout_admissible(&self.implementation.layout, &requested)
        {
            return Err(ManagerError::Layout {
                impl_id: self.impl_id().clone(),
                offered: self.implementation.layout,
                requested,
            });
        }
        if request.size == 0 {
            return Err(ManagerError::ZeroSize);
        }
        if self.volumes.contains_key(&request.volume_id) {
            return Err(ManagerError::AlreadyExists(request.volume_id.clone()));
        }
        let min_iops = request.volume_type.min_iops;
        if let Err(reason) = self.implementation.ledger.reserve(min_iops, request.size) {
            return Ok(Admission::Rejected(reason));
        }
        let volume = Volume {
            volume_id: request.volume_id.clone(),
            impl_id: self.impl_id().clone(),
            size: request.size,
            min_iops,
            attached_to: None,
            created_at: now,
        };
        self.implementation.volumes.insert(volume.volume_id.clone());
        self.implementation.idle_since = None;
        self.volumes.insert(volume.volume_id.clone(), volume);
        if let Err(e) = self.publish(now) {
            self.rollback_admit(&request.volume_id, now);
            return Err(e);
        }
        Ok(Admission::Accepted(request.volume_id.clone()))
    }

    fn rollback_admit(&mut self, id: &VolumeId, now: f64) {
        if let Some(v) = self.volumes.remove(id) {
            self.implementation.ledger.release(v.min_iops, v.size);
            self.implementation.volumes.remove(id);
            if self.volumes.is_empty() {
                self.implementation.idle_since = Some(now);
            }
        }
    }

    pub fn delete_volume(&mut self, id: &VolumeId, now: f64) -> Result<(), ManagerError> {
        let v = self
            .volumes
            .get(id)
            .ok_or_else(|| ManagerError::NotFound(id.clone()))?;
        if v.attached_to.is_some() {
            return Err(ManagerError::InvalidState {
                volume: id.clone(),
                reason: "volume is attached",
            });
        }
        let v = self.volumes.remove(id).expect("checked above");
        self.implementation.ledger.release(v.min_iops, v.size);
        self.implementation.volumes.remove(id);
        self.throttle.caps.remove(id);
        self.throttle.active = !self.throttle.caps.is_empty();
        if self.volumes.is_empty() {
            self.implementation.idle_since = Some(now);
            self.throttle = ThrottleState::default();
        }
        self.publish(now)?;
        Ok(())
    }

    pub fn attach(&mut self, id: &VolumeId, instance: InstanceId) -> Result<(), ManagerError> {
        let v = self
            .volumes
            .get_mut(id)
            .ok_or_else(|| ManagerError::NotFound(id.clone()))?;
        if v.attached_to.is_some() {
            return Err(ManagerError::InvalidState {
                volume: id.clone(),
                reason: "volume is already attached",
            });
        }
        debug!("attach {id} to {instance}");
        v.attached_to = Some(instance);
        Ok(())
    }

    pub fn detach(&mut self, id: &VolumeId) -> Result<InstanceId, ManagerError> {
        let v = self
            .volumes
            .get_mut(id)
            .ok_or_else(|| ManagerError::NotFound(id.clone()))?;
        let instance = v
            .attached_to
            .take()
            .ok_or_else(|| ManagerError::InvalidState {
                volume: id.clone(),
                reason: "volume is not attached",
            })?;
        debug!("detach {id} from {instance}");
        Ok(instance)
    }

    /// Runs the controller over one interval's stats and keeps the result.
    pub fn throttle_tick(
        &mut self,
        stats: &IntervalStats,
        config: &ControlConfig,
    ) -> Result<ThrottleTransition, ManagerError> {
        let volumes: Vec<Volume> = self.volumes.values().cloned().collect();
        let next = throttle_tick(stats, &volumes, &self.throttle, config)?;
        let transition = match (self.throttle.active, next.active) {
            (_, true) if next.caps != self.throttle.caps || !self.throttle.active => {
                ThrottleTransition::Applied(next.caps.clone())
            }
            (true, false) => ThrottleTransition::Released,
            _ => ThrottleTransition::Unchanged,
        };
        self.throttle = next;
        Ok(transition)
    }
}
