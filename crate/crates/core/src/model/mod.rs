// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Domain types shared by every control-plane component.

mod ids;
mod inventory;
mod layout;
mod size;
mod volume_type;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ids::{DiskId, ImplId, InstanceId, NodeId, RequestId, VolumeId};
pub use inventory::{DiskSpec, Medium, StorageNode};
pub use layout::{iops_budget, usable_capacity, LayoutError, LayoutKind};
pub use size::{parse_size, SizeError};
pub use volume_type::{parse_volume_type, ParseError, VolumeType, DEFAULT_IO_SIZE};

/// Why a volume could not be placed or admitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    NoIopsBudget,
    NoCapacity,
    NoRawDisks,
    NoLayoutMatch,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::NoIopsBudget => "NoIopsBudget",
            RejectReason::NoCapacity => "NoCapacity",
            RejectReason::NoRawDisks => "NoRawDisks",
            RejectReason::NoLayoutMatch => "NoLayoutMatch",
        };
        f.write_str(s)
    }
}

/// Admission-control accounting for one implementation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub total_iops_budget: u64,
    pub allocated_iops: u64,
    pub usable_capacity: u64,
    pub allocated_capacity: u64,
}

impl BudgetLedger {
    pub fn new(total_iops_budget: u64, usable_capacity: u64) -> Self {
        Self {
            total_iops_budget,
            allocated_iops: 0,
            usable_capacity,
            allocated_capacity: 0,
        }
    }

    pub fn remaining_iops(&self) -> u64 {
        self.total_iops_budget.saturating_sub(self.allocated_iops)
    }

    pub fn remaining_capacity(&self) -> u64 {
        self.usable_capacity.saturating_sub(self.allocated_capacity)
    }

    /// Checks whether a reservation fits, budget first.
    pub fn check(&self, iops: u64, bytes: u64) -> Result<(), RejectReason> {
        if iops > self.remaining_iops() {
            Err(RejectReason::NoIopsBudget)
        } else if bytes > self.remaining_capacity() {
            Err(RejectReason::NoCapacity)
        } else {
            Ok(())
        }
    }

    pub fn reserve(&mut self, iops: u64, bytes: u64) -> Result<(), RejectReason> {
        self.check(iops, bytes)?;
        self.allocated_iops += iops;
        self.allocated_capacity += bytes;
        Ok(())
    }

    /// Returns a previous reservation. Panics if more is released than was reserved.
    pub fn release(&mut self, iops: u64, bytes: u64) {
        self.allocated_iops = self
            .allocated_iops
            .checked_sub(iops)
            .expect("released more IOPS than reserved");
        self.allocated_capacity = self
            .allocated_capacity
            .checked_sub(bytes)
            .expect("released more capacity than reserved");
    }

    pub fn is_consistent(&self) -> bool {
        self.allocated_iops <= self.total_iops_budget
            && self.allocated_capacity <= self.usable_capacity
    }
}

/// A layout materialized over specific disks of one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageImplementation {
    pub impl_id: ImplId,
    pub node_id: NodeId,
    pub layout: LayoutKind,
    pub disk_ids: Vec<DiskId>,
    /// Sum of member disk capacities.
    pub raw_capacity: u64,
    #[serde(flatten)]
    pub ledger: BudgetLedger,
    pub volumes: BTreeSet<VolumeId>,
    /// Set while the implementation holds no volumes.
    pub idle_since: Option<f64>,
}

impl StorageImplementation {
    pub fn usable_capacity(&self) -> u64 {
        self.ledger.usable_capacity
    }

    pub fn total_iops_budget(&self) -> u64 {
        self.ledger.total_iops_budget
    }

    pub fn allocated_iops(&self) -> u64 {
        self.ledger.allocated_iops
    }

    pub fn allocated_capacity(&self) -> u64 {
        self.ledger.allocated_capacity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Volume {
    pub volume_id: VolumeId,
    pub impl_id: ImplId,
    pub size: u64,
    /// Reserved minimum IOPS.
    pub min_iops: u64,
    pub attached_to: Option<InstanceId>,
    pub created_at: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("control interval must be positive, got {0}")]
    ControlInterval(f64),
    #[error("gc dwell must be nonnegative, got {0}")]
    GcDwell(f64),
    #[error("degradation factor must be in (0, 1], got {0}")]
    Degradation(f64),
    #[error("gc period must be positive, got {0}")]
    GcPeriod(f64),
}

/// Knobs for the throttling controller and garbage collector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    pub control_interval_s: f64,
    pub gc_dwell_s: f64,
    /// Cap applied to unreserved volumes while throttling.
    pub throttle_floor_iops: u64,
}

impl ControlConfig {
    pub fn new(
        control_interval_s: f64,
        gc_dwell_s: f64,
        throttle_floor_iops: u64,
    ) -> Result<Self, ConfigError> {
        if !(control_interval_s > 0.0 && control_interval_s.is_finite()) {
            return Err(ConfigError::ControlInterval(control_interval_s));
        }
        if !(gc_dwell_s >= 0.0 && gc_dwell_s.is_finite()) {
            return Err(ConfigError::GcDwell(gc_dwell_s));
        }
        Ok(Self {
            control_interval_s,
            gc_dwell_s,
            throttle_floor_iops,
        })
    }
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            control_interval_s: 5.0,
            gc_dwell_s: 300.0,
            throttle_floor_iops: 0,
        }
    }
}
