// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

use latebind_core::sim::{run_scenario, run_scenario_with, EventKind, Outcome, ProvisioningMode};
use latebind_core::Scenario;
use proptest::prelude::*;

fn parse(src: &str) -> Scenario {
    src.parse().unwrap_or_else(|e| panic!("{e}"))
}

#[test]
fn empty_scenario_is_quiet() {
    let out = run_scenario(&parse("duration_s = 30\n"), 1).unwrap();
    assert!(out.events.is_empty());
    assert!(out.timeseries.is_empty());
    assert_eq!(out.summary.accepted, 0);
    assert_eq!(out.summary.rejected, 0);
    assert!(out.summary.implementations.is_empty());
    assert_eq!(out.summary.overhead.raw_bytes, 0);
    assert_eq!(out.summary.overhead.overhead_ratio, None);
    assert_eq!(out.summary.decision_latency, None);
}

const LIFECYCLE: &str = r#"
duration_s = 40

[control]
control_interval_s = 5
gc_dwell_s = 10

[[nodes]]
id = "n1"
disks = [{ count = 2, capacity = "500GB", iops = 150 }]

[volume_types.plain]
jbod = 1

[[requests]]
at = 0
op = "create"
volume = "v"
type = "plain"
size = "10GB"

[[requests]]
at = 1
op = "attach"
volume = "v"
instance = "vm-1"

[[requests]]
at = 2
op = "delete"
volume = "v"

[[requests]]
at = 3
op = "detach"
volume = "v"

[[requests]]
at = 4
op = "delete"
volume = "v"

[[requests]]
at = 5
op = "attach"
volume = "v"
instance = "vm-1"
"#;

#[test]
fn lifecycle_and_reclaim() {
    let out = run_scenario(&parse(LIFECYCLE), 0).unwrap();
    let outcomes: Vec<&Outcome> = out.summary.requests.iter().map(|r| &r.outcome).collect();
    assert!(matches!(outcomes[0], Outcome::Accepted { .. }));
    assert_eq!(outcomes[1], &Outcome::Completed);
    // Attached volumes cannot be deleted.
    assert!(matches!(outcomes[2], Outcome::Failed { .. }));
    assert_eq!(outcomes[3], &Outcome::Completed);
    assert_eq!(outcomes[4], &Outcome::Completed);
    assert!(matches!(outcomes[5], Outcome::Failed { .. }));

    let reclaimed: Vec<f64> = out
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::GcReclaimed { .. }))
        .map(|e| e.time_s)
        .collect();
    assert_eq!(reclaimed, vec![15.0]);
    assert_eq!(
        out.summary.free_disks.values().copied().collect::<Vec<_>>(),
        vec![2]
    );
    let seqs: Vec<u64> = out.events.iter().map(|e| e.seq).collect();
    assert_eq!(seqs, (1..=seqs.len() as u64).collect::<Vec<_>>());
}

#[test]
fn random_walk_depends_on_run_seed() {
    let src = r#"
duration_s = 60
[[nodes]]
id = "n1"
disks = [{ count = 1, capacity = "1TB", iops = 300 }]
[volume_types.t]
jbod = 1
[[requests]]
at = 0
op = "create"
volume = "w"
type = "t"
size = "1GB"
[[workloads]]
volume = "w"
random = { seed = 3, mean = 100, jitter = 40 }
"#;
    let s = parse(src);
    let demand = |seed| -> Vec<u64> {
        run_scenario(&s, seed)
            .unwrap()
            .timeseries
            .iter()
            .map(|p| p.demand_iops)
            .collect()
    };
    assert_eq!(demand(1), demand(1));
    assert_ne!(demand(1), demand(2));
    assert!(demand(5).iter().all(|d| *d <= 200));
}

#[test]
fn static_mode_never_provisions_on_demand() {
    let src = r#"
duration_s = 5
[[nodes]]
id = "n1"
disks = [{ count = 7, capacity = "1TB", iops = 100 }]
[volume_types.raid6]
raid = 6
width = 4
[[requests]]
at = 0
op = "create"
type = "raid6"
size = "1TB"
"#;
    let out = run_scenario_with(
        &parse(src),
        0,
        ProvisioningMode::Static("rep:3".parse().unwrap()),
    )
    .unwrap();
    // Two 3-way pools are carved up front; the seventh disk stays raw.
    assert_eq!(out.summary.provisioned, 2);
    assert_eq!(
        out.summary.free_disks.values().copied().collect::<Vec<_>>(),
        vec![1]
    );
    assert_eq!(out.summary.accepted, 1);

    let out = run_scenario_with(
        &parse(src),
        0,
        ProvisioningMode::Static("jbod".parse().unwrap()),
    )
    .unwrap();
    assert_eq!(
        out.summary.rejected, 1,
        "jbod cannot offer two-disk fault tolerance"
    );
}

fn noisy(reservation: u64, demand_a: u64, surge: u64, degradation: f64) -> String {
    format!(
        r#"
duration_s = 200
[control]
control_interval_s = 5
degradation = {degradation}
[[nodes]]
id = "n1"
disks = [{{ count = 4, capacity = "1TB", iops = 200 }}]
[volume_types.r]
raid = 6
width = 4
min-iops = {reservation}
[volume_types.b]
raid = 6
width = 4
[[requests]]
at = 0
op = "create"
volume = "A"
type = "r"
size = "1GB"
[[requests]]
at = 0
op = "create"
volume = "B"
type = "b"
size = "1GB"
[[workloads]]
volume = "A"
constant = {demand_a}
[[workloads]]
volume = "B"
trace = [[0, 0], [50, {surge}]]
"#
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reserved_volume_recovers_after_surge(
        degradation in 0.2f64..=1.0,
        r_frac in 0.0f64..=1.0,
        demand_a in 0u64..=600,
        surge in 0u64..=2000,
    ) {
        let capacity = (400.0 * degradation + 1e-9).floor() as u64;
        let reservation = (capacity as f64 * r_frac) as u64;
        let out = run_scenario(&parse(&noisy(reservation, demand_a, surge, degradation)), 0).unwrap();
        let floor = reservation.min(demand_a);
        for p in out.timeseries.iter().filter(|p| p.volume_id.as_str() == "A" && p.time_s >= 60.0) {
            prop_assert!(p.achieved_iops >= floor, "t={} achieved {} < {}", p.time_s, p.achieved_iops, floor);
        }
        for p in &out.timeseries {
            prop_assert!(p.achieved_iops <= p.demand_iops);
        }
    }
}
