// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DiskId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Medium {
    Hdd,
    Ssd,
}

impl fmt::Display for Medium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Medium::Hdd => f.write_str("hdd"),
            Medium::Ssd => f.write_str("ssd"),
        }
    }
}

/// A raw disk with its offline worst-case 4k random IO profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiskSpec {
    pub disk_id: DiskId,
    /// Bytes.
    pub capacity: u64,
    pub medium: Medium,
    pub profiled_iops: u64,
}

impl DiskSpec {
    pub fn new(
        disk_id: impl Into<DiskId>,
        capacity: u64,
        medium: Medium,
        profiled_iops: u64,
    ) -> Self {
        Self {
            disk_id: disk_id.into(),
            capacity,
            medium,
            profiled_iops,
        }
    }
}

/// Raw inventory of one storage node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageNode {
    pub node_id: NodeId,
    pub disks: Vec<DiskSpec>,
    pub free_disk_ids: BTreeSet<DiskId>,
}

impl StorageNode {
    /// A node with every disk free.
    pub fn new(node_id: impl Into<NodeId>, disks: Vec<DiskSpec>) -> Self {
        let free_disk_ids = disks.iter().map(|d| d.disk_id.clone()).collect();
        Self {
            node_id: node_id.into(),
            disks,
            free_disk_ids,
        }
    }

    /// `count` identical disks named `<node>-d00`, `<node>-d01`, ...
    pub fn uniform(
        node_id: impl Into<NodeId>,
        count: usize,
        capacity: u64,
        medium: Medium,
        profiled_iops: u64,
    ) -> Self {
        let node_id = node_id.into();
        let width = count.saturating_sub(1).to_string().len().max(2);
        let disks = (0..count)
            .map(|i| {
                DiskSpec::new(
                    format!("{node_id}-d{i:0width$}"),
                    capacity,
                    medium,
                    profiled_iops,
                )
            })
            .collect();
        Self::new(node_id, disks)
    }

    pub fn disk(&self, id: &DiskId) -> Option<&DiskSpec> {
        self.disks.iter().find(|d| &d.disk_id == id)
    }

    pub fn free_disks(&self) -> Vec<DiskSpec> {
        self.disks
            .iter()
            .filter(|d| self.free_disk_ids.contains(&d.disk_id))
            .cloned()
            .collect()
    }
}
