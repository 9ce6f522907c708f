// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Storage layouts and the capacity / IOPS-budget arithmetic over them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::DiskSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("{layout} needs {expected} disks, got {actual}")]
    DiskCount {
        layout: LayoutKind,
        expected: String,
        actual: usize,
    },
    #[error("invalid layout: {0}")]
    Invalid(String),
    #[error("cannot parse layout spec {0:?} (expected jbod | raid:<width>:<parity> | rep:<r> | ec:<k>:<m>)")]
    Syntax(String),
}

/// How an implementation arranges its disks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayoutKind {
    Jbod,
    /// `parity_count` 1 is RAID-5, 2 is RAID-6.
    Raid {
        width: u32,
        parity_count: u32,
    },
    ReplicatedPool {
        replicas: u32,
    },
    ErasureCodedPool {
        k: u32,
        m: u32,
    },
}

impl LayoutKind {
    pub fn raid(width: u32, parity_count: u32) -> Result<Self, LayoutError> {
        Self::Raid {
            width,
            parity_count,
        }
        .validated()
    }

    pub fn replicated(replicas: u32) -> Result<Self, LayoutError> {
        Self::ReplicatedPool { replicas }.validated()
    }

    pub fn erasure_coded(k: u32, m: u32) -> Result<Self, LayoutError> {
        Self::ErasureCodedPool { k, m }.validated()
    }

    /// Checks the per-kind parameter ranges.
    pub fn validated(self) -> Result<Self, LayoutError> {
        match self {
            LayoutKind::Jbod => {}
            LayoutKind::Raid {
                width,
                parity_count,
            } => {
                if !(1..=2).contains(&parity_count) {
                    return Err(LayoutError::Invalid(format!(
                        "raid parity count must be 1 or 2, got {parity_count}"
                    )));
                }
                if width < 2 || width <= parity_count {
                    return Err(LayoutError::Invalid(format!(
                        "raid width {width} must be at least 2 and exceed parity count {parity_count}"
                    )));
                }
            }
            LayoutKind::ReplicatedPool { replicas } => {
                if replicas < 1 {
                    return Err(LayoutError::Invalid(
                        "replica count must be at least 1".into(),
                    ));
                }
            }
            LayoutKind::ErasureCodedPool { k, m } => {
                if k < 1 {
                    return Err(LayoutError::Invalid(
                        "erasure coding k must be at least 1".into(),
                    ));
                }
                if k.checked_add(m).is_none() {
                    return Err(LayoutError::Invalid("erasure coding k+m overflows".into()));
                }
            }
        }
        Ok(self)
    }

    /// Disks consumed when a new implementation of this layout is built.
    pub fn disks_required(&self) -> usize {
        match *self {
            LayoutKind::Jbod => 1,
            LayoutKind::Raid { width, .. } => width as usize,
            LayoutKind::ReplicatedPool { replicas } => replicas as usize,
            LayoutKind::ErasureCodedPool { k, m } => k as usize + m as usize,
        }
    }

    /// Number of disk failures the layout survives.
    pub fn fault_tolerance(&self) -> u32 {
        match *self {
            LayoutKind::Jbod => 0,
            LayoutKind::Raid { parity_count, .. } => parity_count,
            LayoutKind::ReplicatedPool { replicas } => replicas - 1,
            LayoutKind::ErasureCodedPool { m, .. } => m,
        }
    }

    pub fn is_pool(&self) -> bool {
        matches!(
            self,
            LayoutKind::ReplicatedPool { .. } | LayoutKind::ErasureCodedPool { .. }
        )
    }

    fn check_disk_count(&self, actual: usize) -> Result<(), LayoutError> {
        let required = self.disks_required();
        let (ok, expected) = if self.is_pool() {
            (actual >= required, format!("at least {required}"))
        } else {
            (actual == required, required.to_string())
        };
        if ok {
            Ok(())
        } else {
            Err(LayoutError::DiskCount {
                layout: *self,
                expected,
                actual,
            })
        }
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LayoutKind::Jbod => f.write_str("jbod"),
            LayoutKind::Raid {
                width,
                parity_count,
            } => write!(f, "raid:{width}:{parity_count}"),
            LayoutKind::ReplicatedPool { replicas } => write!(f, "rep:{replicas}"),
            LayoutKind::ErasureCodedPool { k, m } => write!(f, "ec:{k}:{m}"),
        }
    }
}

impl FromStr for LayoutKind {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || LayoutError::Syntax(s.to_owned());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.parse::<u32>().map_err(|_| syntax());
        match parts.as_slice() {
            ["jbod"] => Ok(LayoutKind::Jbod),
            ["raid", w, p] => LayoutKind::raid(num(w)?, num(p)?),
            ["rep", r] => LayoutKind::replicated(num(r)?),
            ["ec", k, m] => LayoutKind::erasure_coded(num(k)?, num(m)?),
            _ => Err(syntax()),
        }
    }
}

/// Usable bytes of `layout` built over `disks`.
pub fn usable_capacity(layout: &LayoutKind, disks: &[DiskSpec]) -> Result<u64, LayoutError> {
    layout.check_disk_count(disks.len())?;
    let total: u128 = disks.iter().map(|d| u128::from(d.capacity)).sum();
    let bytes = match *layout {
        LayoutKind::Jbod => total,
        LayoutKind::Raid {
            width,
            parity_count,
        } => {
            let min = disks.iter().map(|d| d.capacity).min().unwrap_or(0);
            u128::from(width - parity_count) * u128::from(min)
        }
        LayoutKind::ReplicatedPool { replicas } => total / u128::from(replicas),
        LayoutKind::ErasureCodedPool { k, m } => total * u128::from(k) / u128::from(k + m),
    };
    // Never exceeds the raw total, which fits in u128 but may not fit u64.
    Ok(u64::try_from(bytes).unwrap_or(u64::MAX))
}

/// Worst-case IOPS budget of `layout` built over `disks`.
///
/// Stripe layouts get one disk's worth of IOPS per data member, limited by
/// the slowest member. Pools divide the aggregate by their write fan-out.
pub fn iops_budget(layout: &LayoutKind, disks: &[DiskSpec]) -> Result<u64, LayoutError> {
    layout.check_disk_count(disks.len())?;
    let total: u128 = disks.iter().map(|d| u128::from(d.profiled_iops)).sum();
    let iops = match *layout {
        LayoutKind::Jbod => total,
        LayoutKind::Raid {
            width,
            parity_count,
        } => {
            let min = disks.iter().map(|d| d.profiled_iops).min().unwrap_or(0);
            u128::from(width - parity_count) * u128::from(min)
        }
        LayoutKind::ReplicatedPool { replicas } => total / u128::from(replicas),
        LayoutKind::ErasureCodedPool { k, m } => total * u128::from(k) / u128::from(k + m),
    };
    Ok(u64::try_from(iops).unwrap_or(u64::MAX))
}
