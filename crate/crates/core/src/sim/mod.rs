// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Discrete-time replay of a scenario through the control plane.
//!
//! Time advances in control-interval steps. At each step due requests are
//! handled at their own timestamps, then every implementation serves its
//! volumes' demand under the current throttle caps, the managers evaluate the
//! interval, and the garbage collector runs when its period has elapsed.

mod alloc;
mod control;
mod event;
mod workload;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use alloc::{allocate_iops, capacity_degradation};
pub use control::{ControlPlane, Outcome};
pub use event::{EventKind, SimEvent};
pub use workload::{sub_seed, Demand, DemandGen, WorkloadSpec};

use crate::manager::{IntervalStats, ThrottleTransition};
use crate::model::{ConfigError, LayoutKind, RequestId, VolumeId};
use crate::report::{build_summary, RequestRecord, SummaryReport};
use crate::scenario::{RequestAction, Scenario};
use crate::scheduler::{PlacementPolicy, VolumeRequest};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("scenario references undefined volume type {0:?}")]
    UndefinedType(String),
    #[error("throttle input: {0}")]
    Throttle(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ProvisioningMode {
    /// Implementations are built when requests need them.
    #[default]
    LateBinding,
    /// Every disk is carved into this layout before the first request.
    Static(LayoutKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesPoint {
    pub time_s: f64,
    pub volume_id: VolumeId,
    pub demand_iops: u64,
    pub achieved_iops: u64,
    pub cap_iops: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub events: Vec<SimEvent>,
    pub timeseries: Vec<TimeSeriesPoint>,
    pub summary: SummaryReport,
}

struct EventLog {
    events: Vec<SimEvent>,
}

impl EventLog {
    fn extend(&mut self, time_s: f64, kinds: impl IntoIterator<Item = EventKind>) {
        for kind in kinds {
            let seq = self.events.len() as u64 + 1;
            self.events.push(SimEvent { seq, time_s, kind });
        }
    }
}

/// Late-binding replay.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<SimOutput, SimError> {
    run_scenario_with(scenario, seed, ProvisioningMode::LateBinding)
}

pub fn run_scenario_with(
    scenario: &Scenario,
    seed: u64,
    mode: ProvisioningMode,
) -> Result<SimOutput, SimError> {
    capacity_degradation(1, scenario.degradation)?;
    crate::model::ControlConfig::new(
        scenario.control.control_interval_s,
        scenario.control.gc_dwell_s,
        scenario.control.throttle_floor_iops,
    )?;
    if scenario.gc_period_s.is_nan() || scenario.gc_period_s <= 0.0 {
        return Err(ConfigError::GcPeriod(scenario.gc_period_s).into());
    }

    let policy = match mode {
        ProvisioningMode::LateBinding => PlacementPolicy::LateBinding,
        ProvisioningMode::Static(_) => PlacementPolicy::Static,
    };
    let mut cp = ControlPlane::new(scenario.nodes.clone(), policy, 0.0);
    let mut log = EventLog { events: Vec::new() };
    if let ProvisioningMode::Static(layout) = mode {
        let events = cp.preprovision(layout, 0.0);
        log.extend(0.0, events);
    }

    let mut gens: BTreeMap<VolumeId, DemandGen> = scenario
        .workloads
        .iter()
        .map(|w| (w.volume_id.clone(), DemandGen::new(w, seed)))
        .collect();
    let mut records = Vec::with_capacity(scenario.requests.len());
    let mut timeseries = Vec::new();
    let config = scenario.control;
    let dt = config.control_interval_s;
    // Tolerates accumulated float error in step times.
    let eps = dt * 1e-9;

    let mut next = 0usize;
    let mut last_gc = 0.0f64;
    let mut step = 0u64;
    loop {
        let t = step as f64 * dt;
        if t > scenario.duration_s + eps {
            break;
        }
        while next < scenario.requests.len() && scenario.requests[next].at <= t + eps {
            let r = &scenario.requests[next];
            let (outcome, events) =
                handle_request(&mut cp, scenario, r.at, &r.request_id, &r.action)?;
            log.extend(r.at, events);
            records.push(RequestRecord {
                index: r.index,
                request_id: r.request_id.clone(),
                at: r.at,
                op: r.action.op().to_owned(),
                volume_id: r.action.volume_id().clone(),
                outcome,
            });
            next += 1;
        }

        serve_interval(&mut cp, scenario, t, &mut gens, &mut timeseries, &mut log)?;

        if t - last_gc >= scenario.gc_period_s - eps {
            let events = cp.garbage_collect(t, &config);
            log.extend(t, events);
            last_gc = t;
        }
        step += 1;
    }

    let summary = build_summary(scenario, &cp, records, &log.events);
    Ok(SimOutput {
        events: log.events,
        timeseries,
        summary,
    })
}

fn handle_request(
    cp: &mut ControlPlane,
    scenario: &Scenario,
    at: f64,
    request_id: &RequestId,
    action: &RequestAction,
) -> Result<(Outcome, Vec<EventKind>), SimError> {
    let mut events = vec![EventKind::RequestArrived {
        request_id: request_id.clone(),
        op: action.op().to_owned(),
        volume_id: action.volume_id().clone(),
        volume_type: match action {
            RequestAction::Create { volume_type, .. } => Some(volume_type.clone()),
            _ => None,
        },
        size: match action {
            RequestAction::Create { size, .. } => Some(*size),
            _ => None,
        },
    }];
    let (outcome, more) = match action {
        RequestAction::Create {
            volume_id,
            volume_type,
            size,
            ..
        } => {
            let vt = scenario
                .volume_types
                .get(volume_type)
                .ok_or_else(|| SimError::UndefinedType(volume_type.clone()))?;
            let request = VolumeRequest {
                request_id: request_id.clone(),
                volume_id: volume_id.clone(),
                volume_type: vt.clone(),
                size: *size,
                submitted_at: at,
            };
            cp.create_volume(&request, at)
        }
        RequestAction::Delete { volume_id } => cp.delete_volume(request_id, volume_id, at),
        RequestAction::Attach {
            volume_id,
            instance,
        } => cp.attach(request_id, volume_id, instance),
        RequestAction::Detach { volume_id } => cp.detach(request_id, volume_id),
    };
    events.extend(more);
    Ok((outcome, events))
}

fn serve_interval(
    cp: &mut ControlPlane,
    scenario: &Scenario,
    t: f64,
    gens: &mut BTreeMap<VolumeId, DemandGen>,
    timeseries: &mut Vec<TimeSeriesPoint>,
    log: &mut EventLog,
) -> Result<(), SimError> {
    let mut points = Vec::new();
    let mut events = Vec::new();
    for manager in cp.managers_mut().values_mut() {
        if manager.is_idle() {
            continue;
        }
        let demands: BTreeMap<VolumeId, u64> = manager
            .volumes()
            .map(|v| {
                let d = gens.get_mut(&v.volume_id).map_or(0, |g| g.next(t));
                (v.volume_id.clone(), d)
            })
            .collect();
        let caps = manager.throttle_state().caps.clone();
        let capacity = capacity_degradation(
            manager.implementation().total_iops_budget(),
            scenario.degradation,
        )?;
        let achieved = allocate_iops(&demands, &caps, capacity);
        for (id, d) in &demands {
            points.push(TimeSeriesPoint {
                time_s: t,
                volume_id: id.clone(),
                demand_iops: *d,
                achieved_iops: achieved[id],
                cap_iops: caps.get(id).copied(),
            });
        }
        let violators: Vec<VolumeId> = manager
            .volumes()
            .filter(|v| v.min_iops > 0 && achieved[&v.volume_id] < v.min_iops)
            .map(|v| v.volume_id.clone())
            .collect();
        let stats = IntervalStats::new(achieved).with_offered(demands);
        match manager
            .throttle_tick(&stats, &scenario.control)
            .map_err(|e| SimError::Throttle(e.to_string()))?
        {
            ThrottleTransition::Applied(caps) => events.push(EventKind::ThrottleApplied {
                impl_id: manager.impl_id().clone(),
                caps,
                violators,
            }),
            ThrottleTransition::Released => events.push(EventKind::ThrottleReleased {
                impl_id: manager.impl_id().clone(),
            }),
            ThrottleTransition::Unchanged => {}
        }
    }
    points.sort_by(|a, b| a.volume_id.cmp(&b.volume_id));
    timeseries.extend(points);
    log.extend(t, events);
    Ok(())
}
