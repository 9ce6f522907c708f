// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! reports one line whether it passes or not; exits non-zero on any failure.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use latebind_core::experiment::{self, EVENTS_FILE, TIMESERIES_FILE};
use latebind_core::model::{
    iops_budget, DiskSpec, InstanceId, LayoutKind, Medium, StorageNode, VolumeId, VolumeType,
};
use latebind_core::scenario::Scenario;
use latebind_core::scheduler::{
    measure_decision_latency, synthetic_snapshot, PlacementPolicy, ScheduleDecision, VolumeRequest,
};
use latebind_core::sim::{
    allocate_iops, run_scenario, ControlPlane, EventKind, SimEvent, SimOutput,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TB: u64 = 1_000_000_000_000;
const GB: u64 = 1_000_000_000;

type Check = fn() -> Result<String, String>;

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn load(name: &str) -> Scenario {
    Scenario::from_path(&scenario_path(name)).expect("bundled scenario parses")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn describe(e: &SimEvent) -> Option<String> {
    let s = match &e.kind {
        EventKind::RequestArrived {
            request_id,
            volume_type,
            ..
        } => format!(
            "arrive {request_id} {}",
            volume_type.as_deref().unwrap_or("-")
        ),
        EventKind::Scheduled { decision, .. } => match decision {
            ScheduleDecision::UseExisting { impl_id } => format!("use {impl_id}"),
            ScheduleDecision::Provision {
                node_id,
                layout,
                disk_count,
                ..
            } => format!("provision {node_id} {layout} x{disk_count}"),
            ScheduleDecision::Reject { reason } => format!("reject {reason:?}"),
        },
        EventKind::Provisioned {
            impl_id,
            total_iops_budget,
            ..
        } => format!("provisioned {impl_id} budget={total_iops_budget}"),
        EventKind::Admitted {
            volume_id,
            impl_id,
            allocated_iops,
            total_iops_budget,
            ..
        } => format!("admitted {volume_id} {impl_id} {allocated_iops}/{total_iops_budget}"),
        EventKind::Rejected {
            volume_id, reason, ..
        } => format!("rejected {volume_id} {reason:?}"),
        _ => return None,
    };
    Some(format!("{:>5.1} {s}", e.time_s))
}

fn replay_mixed_sequence() -> Result<String, String> {
    let scenario = load("mixed_sequence.scenario");
    let start = Instant::now();
    let out = run_scenario(&scenario, 0).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let got: Vec<String> = out.events.iter().filter_map(describe).collect();
    ensure(got.len() == out.events.len(), || {
        "unexpected event kinds in the log".into()
    })?;
    let want = [
        "  0.0 arrive req-1 Type 1",
        "  0.0 provision node1 raid:10:1 x10",
        "  0.0 provisioned node1-impl-0001 budget=1800",
        "  0.0 admitted vol-1 node1-impl-0001 0/1800",
        " 90.0 arrive req-2 Type 2",
        " 90.0 provision node2 raid:4:2 x4",
        " 90.0 provisioned node2-impl-0001 budget=400",
        " 90.0 admitted vol-2 node2-impl-0001 100/400",
        "180.0 arrive req-3 Type 3",
        "180.0 provision node2 jbod x1",
        "180.0 provisioned node2-impl-0002 budget=200",
        "180.0 admitted vol-3 node2-impl-0002 0/200",
        "270.0 arrive req-4 Type 2",
        "270.0 use node2-impl-0001",
        "270.0 admitted vol-4 node2-impl-0001 200/400",
        "360.0 arrive req-5 Type 2",
        "360.0 use node2-impl-0001",
        "360.0 admitted vol-5 node2-impl-0001 300/400",
        "450.0 arrive req-6 Type 2",
        "450.0 use node2-impl-0001",
        "450.0 admitted vol-6 node2-impl-0001 400/400",
        "540.0 arrive req-7 Type 2",
        "540.0 reject NoIopsBudget",
        "540.0 rejected vol-7 NoIopsBudget",
    ];
    ensure(got == want, || {
        format!("event log mismatch:\n{}", got.join("\n"))
    })?;
    let seqs: Vec<u64> = out.events.iter().map(|e| e.seq).collect();
    ensure(seqs == (1..=24).collect::<Vec<_>>(), || {
        format!("seq numbers {seqs:?}")
    })?;
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("24 events match, {} ms", elapsed.as_millis()))
}

fn budget_arithmetic() -> Result<String, String> {
    let disks = |n: usize| -> Vec<DiskSpec> {
        (0..n)
            .map(|i| DiskSpec::new(format!("d{i}"), TB, Medium::Hdd, 200))
            .collect()
    };
    let raid6 =
        iops_budget(&LayoutKind::raid(4, 2).unwrap(), &disks(4)).map_err(|e| e.to_string())?;
    let jbod = iops_budget(&LayoutKind::Jbod, &disks(1)).map_err(|e| e.to_string())?;
    ensure(raid6 == 400, || format!("raid:4:2 budget {raid6}"))?;
    ensure(jbod == 200, || format!("jbod budget {jbod}"))?;
    Ok("raid:4:2 = 400, jbod = 200".into())
}

fn garbage_collection() -> Result<String, String> {
    let full = load("mixed_sequence_gc.scenario");
    let mut before_rerun = full.clone();
    let rerun_at = before_rerun.requests.last().unwrap().at;
    before_rerun.requests.pop();
    before_rerun.duration_s = rerun_at - 1.0;

    let idle = run_scenario(&before_rerun, 0).map_err(|e| e.to_string())?;
    let free: BTreeMap<String, usize> = idle
        .summary
        .free_disks
        .iter()
        .map(|(n, c)| (n.to_string(), *c))
        .collect();
    let want: BTreeMap<String, usize> =
        [("node1".to_string(), 10), ("node2".to_string(), 7)].into();
    ensure(free == want, || format!("free disks after dwell {free:?}"))?;
    ensure(idle.summary.implementations.is_empty(), || {
        "implementations survive GC".into()
    })?;
    ensure(idle.summary.reclaimed.len() == 3, || {
        format!("reclaimed {:?}", idle.summary.reclaimed)
    })?;

    let out = run_scenario(&full, 0).map_err(|e| e.to_string())?;
    let last = out.events.last().ok_or("empty log")?;
    match &last.kind {
        EventKind::Admitted {
            volume_id, impl_id, ..
        } if volume_id.as_str() == "vol-1-again" && impl_id.as_str().starts_with("node1-") => Ok(
            format!("free {{node1: 10, node2: 7}}, re-run placed on {impl_id}"),
        ),
        other => Err(format!("re-run of Type 1 ended with {other:?}")),
    }
}

fn noisy_neighbor() -> (Scenario, SimOutput) {
    let scenario = load("noisy_neighbor.scenario");
    let out = run_scenario(&scenario, 0).expect("noisy neighbor runs");
    (scenario, out)
}

fn achieved(out: &SimOutput, volume: &str) -> Vec<(f64, u64, Option<u64>)> {
    out.timeseries
        .iter()
        .filter(|p| p.volume_id.as_str() == volume)
        .map(|p| (p.time_s, p.achieved_iops, p.cap_iops))
        .collect()
}

const SURGE_AT: f64 = 100.0;
const CALM_AT: f64 = 300.0;

fn throttle_efficacy() -> Result<String, String> {
    let (scenario, out) = noisy_neighbor();
    let dt = scenario.control.control_interval_s;
    let a = achieved(&out, "A");
    let first_violation = a
        .iter()
        .find(|(t, got, _)| *t >= SURGE_AT && *got < 100)
        .map(|(t, ..)| *t)
        .ok_or("no violation observed")?;
    let applied = out
        .events
        .iter()
        .find(|e| matches!(e.kind, EventKind::ThrottleApplied { .. }))
        .ok_or("ThrottleApplied never emitted")?;
    ensure(applied.time_s <= first_violation + dt, || {
        format!(
            "ThrottleApplied at {} for violation at {first_violation}",
            applied.time_s
        )
    })?;
    let after: Vec<_> = a
        .iter()
        .filter(|(t, ..)| *t >= SURGE_AT + 2.0 * dt)
        .collect();
    ensure(!after.is_empty(), || "no intervals after surge".into())?;
    if let Some((t, got, _)) = after.iter().find(|(_, got, _)| *got < 100) {
        return Err(format!("A achieved {got} at t={t}"));
    }
    Ok(format!(
        "violation at {first_violation}, applied at {}, A >= 100 over {} intervals",
        applied.time_s,
        after.len()
    ))
}

fn throttle_release() -> Result<String, String> {
    let (scenario, out) = noisy_neighbor();
    let dt = scenario.control.control_interval_s;
    let released: Vec<f64> = out
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::ThrottleReleased { .. }))
        .map(|e| e.time_s)
        .collect();
    ensure(released.len() == 1, || format!("released at {released:?}"))?;
    let at = released[0];
    ensure((CALM_AT..=CALM_AT + dt).contains(&at), || {
        format!("released at {at}")
    })?;
    let reapplied = out
        .events
        .iter()
        .any(|e| e.time_s > at && matches!(e.kind, EventKind::ThrottleApplied { .. }));
    ensure(!reapplied, || "caps reapplied after release".into())?;
    for p in out.timeseries.iter().filter(|p| p.time_s > at) {
        ensure(p.cap_iops.is_none(), || {
            format!("{} capped at t={}", p.volume_id, p.time_s)
        })?;
    }
    Ok(format!(
        "released at {at}, clear through {}",
        scenario.duration_s
    ))
}

fn overhead_comparison() -> Result<String, String> {
    let scenario = load("app_redundancy.scenario");
    let run = experiment::compare_static(&scenario, "rep:3".parse().unwrap(), 0)
        .map_err(|e| e.to_string())?;
    let c = &run.comparison;
    let fixed = c
        .static_
        .total_storage_overhead
        .ok_or("no static overhead")?;
    let dynamic = c
        .dynamic
        .total_storage_overhead
        .ok_or("no dynamic overhead")?;
    ensure(fixed == 12.0, || format!("static overhead {fixed}"))?;
    ensure(dynamic == 6.0, || format!("dynamic overhead {dynamic}"))?;
    ensure(c.static_.accepted == 4 && c.dynamic.accepted == 4, || {
        "not every volume placed".into()
    })?;
    Ok("static 12x, dynamic 6x".into())
}

/// Hands out one IOPS at a time to the unsatisfied volume with the least so far.
fn water_fill_oracle(demands: &[u64], caps: &[Option<u64>], capacity: u64) -> Vec<u64> {
    let want: Vec<u64> = demands
        .iter()
        .zip(caps)
        .map(|(d, c)| c.map_or(*d, |c| c.min(*d)))
        .collect();
    let mut got = vec![0u64; want.len()];
    for _ in 0..capacity {
        let next = (0..want.len())
            .filter(|&i| got[i] < want[i])
            .min_by_key(|&i| (got[i], i));
        match next {
            Some(i) => got[i] += 1,
            None => break,
        }
    }
    got
}

fn allocator_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    for case in 0..1000 {
        let n = rng.random_range(0..=8usize);
        let demands: Vec<u64> = (0..n).map(|_| rng.random_range(0..=1000)).collect();
        let caps: Vec<Option<u64>> = (0..n)
            .map(|_| rng.random_bool(0.4).then(|| rng.random_range(0..=1000)))
            .collect();
        let capacity = rng.random_range(0..=4000);
        // Two-digit ids keep lexical and numeric order the same.
        let ids: Vec<VolumeId> = (0..n).map(|i| VolumeId::from(format!("v{i:02}"))).collect();
        let demand_map = ids.iter().cloned().zip(demands.iter().copied()).collect();
        let cap_map = ids
            .iter()
            .zip(&caps)
            .filter_map(|(id, c)| c.map(|c| (id.clone(), c)))
            .collect();
        let got = allocate_iops(&demand_map, &cap_map, capacity);
        let want = water_fill_oracle(&demands, &caps, capacity);
        let got: Vec<u64> = ids.iter().map(|id| got[id]).collect();
        ensure(got == want, || {
            format!("case {case}: demands {demands:?} caps {caps:?} capacity {capacity}: {got:?} != {want:?}")
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("1000 instances equal, {} ms", elapsed.as_millis()))
}

fn random_type(rng: &mut ChaCha8Rng) -> VolumeType {
    let layout = match rng.random_range(0..5) {
        0 => LayoutKind::Jbod,
        1 => LayoutKind::raid(4, 2).unwrap(),
        2 => LayoutKind::raid(6, 1).unwrap(),
        3 => LayoutKind::replicated(3).unwrap(),
        _ => LayoutKind::erasure_coded(4, 2).unwrap(),
    };
    VolumeType {
        name: layout.to_string(),
        layout,
        min_iops: rng.random_range(0..=4) * 50,
        io_size: 4096,
        extra: Default::default(),
    }
}

fn scheduling_latency() -> Result<String, String> {
    let snapshot = synthetic_snapshot(100, 50, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let requests: Vec<VolumeRequest> = (0..1000)
        .map(|i| VolumeRequest {
            request_id: format!("req-{i}").into(),
            volume_id: format!("vol-{i}").into(),
            volume_type: random_type(&mut rng),
            size: rng.random_range(1..=500) * GB,
            submitted_at: 0.0,
        })
        .collect();
    let stats = measure_decision_latency(&requests, &snapshot).ok_or("no samples")?;
    ensure(stats.samples == 1000, || {
        format!("{} samples", stats.samples)
    })?;
    ensure(stats.median_s < 0.005, || {
        format!("median {:.3} ms", stats.median_s * 1e3)
    })?;
    Ok(format!(
        "median {:.3} ms, p99 {:.3} ms",
        stats.median_s * 1e3,
        stats.p99_s * 1e3
    ))
}

fn determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut names = Vec::new();
    for entry in std::fs::read_dir(scenario_path("")).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_some_and(|x| x == "scenario") {
            names.push(path);
        }
    }
    names.sort();
    ensure(!names.is_empty(), || "no bundled scenarios".into())?;
    for path in &names {
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            let out = dir.path().join(format!("{stem}-{attempt}"));
            experiment::run(path, 42, &out).map_err(|e| e.to_string())?;
            let read = |f: &str| std::fs::read(out.join(f)).map_err(|e| e.to_string());
            outputs.push((read(EVENTS_FILE)?, read(TIMESERIES_FILE)?));
        }
        ensure(outputs[0] == outputs[1], || {
            format!("{stem}: outputs differ between runs")
        })?;
    }
    Ok(format!("{} scenarios byte-identical", names.len()))
}

fn ledger_invariants() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut ops = 0usize;
    for round in 0..10_000 {
        let nodes = vec![
            StorageNode::uniform("n1", rng.random_range(1..=8), TB, Medium::Hdd, 200),
            StorageNode::uniform("n2", rng.random_range(1..=8), TB, Medium::Ssd, 1000),
        ];
        let mut cp = ControlPlane::new(nodes, PlacementPolicy::LateBinding, 0.0);
        let mut created: Vec<VolumeId> = Vec::new();
        let steps = rng.random_range(1..=12);
        for step in 0..steps {
            let now = f64::from(step);
            let rid = format!("r{step}").into();
            match rng.random_range(0..4) {
                0 | 1 => {
                    let vid: VolumeId = format!("v{step}").into();
                    let req = VolumeRequest {
                        request_id: rid,
                        volume_id: vid.clone(),
                        volume_type: random_type(&mut rng),
                        size: rng.random_range(1..=2000) * GB,
                        submitted_at: now,
                    };
                    cp.create_volume(&req, now);
                    created.push(vid);
                }
                op if !created.is_empty() => {
                    let vid = created[rng.random_range(0..created.len())].clone();
                    match (op, rng.random_bool(0.5)) {
                        (2, _) => {
                            cp.delete_volume(&rid, &vid, now);
                        }
                        (_, true) => {
                            cp.attach(&rid, &vid, &InstanceId::from("vm"));
                        }
                        (_, false) => {
                            cp.detach(&rid, &vid);
                        }
                    }
                }
                _ => {}
            }
            ops += 1;
            check_ledgers(&cp).map_err(|e| format!("round {round} step {step}: {e}"))?;
        }
    }
    Ok(format!("10000 interleavings, {ops} operations"))
}

fn check_ledgers(cp: &ControlPlane) -> Result<(), String> {
    let snapshot = cp.db().snapshot();
    for (id, m) in cp.managers() {
        let imp = m.implementation();
        let reserved: u64 = m.volumes().map(|v| v.min_iops).sum();
        let stored: u64 = m.volumes().map(|v| v.size).sum();
        ensure(imp.allocated_iops() <= imp.total_iops_budget(), || {
            format!("{id} over IOPS budget")
        })?;
        ensure(imp.allocated_capacity() <= imp.usable_capacity(), || {
            format!("{id} over capacity")
        })?;
        ensure(reserved == imp.allocated_iops(), || {
            format!("{id}: reserved {reserved} != allocated")
        })?;
        ensure(stored == imp.allocated_capacity(), || {
            format!("{id}: stored {stored} != allocated")
        })?;
        let report = snapshot
            .managers
            .get(id)
            .ok_or_else(|| format!("{id} missing from state"))?;
        ensure(report.allocated_iops == imp.allocated_iops(), || {
            format!("{id} report stale")
        })?;
    }
    ensure(snapshot.conflicting_disks().is_empty(), || {
        "disk claimed twice".into()
    })?;
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        (
            "mixed request sequence replays exactly",
            replay_mixed_sequence,
        ),
        ("budget arithmetic", budget_arithmetic),
        ("garbage collection returns every disk", garbage_collection),
        ("throttling protects the reserved volume", throttle_efficacy),
        (
            "throttle caps clear when the neighbor calms",
            throttle_release,
        ),
        ("static vs dynamic storage overhead", overhead_comparison),
        ("allocator matches progressive filling", allocator_oracle),
        ("scheduling decision latency", scheduling_latency),
        ("same seed gives identical outputs", determinism),
        (
            "ledger invariants under random interleavings",
            ledger_invariants,
        ),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
