// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use crate::model::{ConfigError, VolumeId};

/// Max-min fair split of `capacity` IOPS across volumes.
///
/// Each volume's effective demand is its demand clipped by its cap. Volumes
/// below the water level get their full demand; the rest share what is left
/// equally, with the integer remainder handed out one IOPS at a time in
/// volume-id order.
pub fn allocate_iops(
    demands: &BTreeMap<VolumeId, u64>,
    caps: &BTreeMap<VolumeId, u64>,
    capacity: u64,
) -> BTreeMap<VolumeId, u64> {
    let effective: Vec<(&VolumeId, u64)> = demands
        .iter()
        .map(|(id, d)| (id, caps.get(id).map_or(*d, |c| (*d).min(*c))))
        .collect();

    let mut order: Vec<usize> = (0..effective.len()).collect();
    order.sort_by_key(|&i| effective[i].1);

    let mut achieved = vec![0u64; effective.len()];
    let mut remaining = capacity;
    let mut active = effective.len() as u64;
    let mut level_from = effective.len();
    for (pos, &i) in order.iter().enumerate() {
        let d = effective[i].1;
        if u128::from(d) * u128::from(active) <= u128::from(remaining) {
            achieved[i] = d;
            remaining -= d;
            active -= 1;
        } else {
            level_from = pos;
            break;
        }
    }
    if level_from < effective.len() {
        let mut unsatisfied: Vec<usize> = order[level_from..].to_vec();
        unsatisfied.sort_unstable();
        let level = remaining / active;
        let mut extra = remaining % active;
        for i in unsatisfied {
            achieved[i] = level + u64::from(extra > 0);
            extra = extra.saturating_sub(1);
        }
    }

    effective
        .iter()
        .zip(achieved)
        .map(|((id, _), a)| ((*id).clone(), a))
        .collect()
}

/// Capacity left after co-located interference, `floor(budget * factor)`.
pub fn capacity_degradation(total_iops_budget: u64, factor: f64) -> Result<u64, ConfigError> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(ConfigError::Degradation(factor));
    }
    // The epsilon absorbs binary representation error (0.45 * 400 = 180).
    Ok((total_iops_budget as f64 * factor + 1e-9).floor() as u64)
}
