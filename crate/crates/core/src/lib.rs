// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Late-bound block storage control plane.
//!
//! Storage implementations (RAID arrays, single disks, replicated and
//! erasure-coded pools) are built from raw disks only when a volume request
//! needs one. Each implementation gets a manager that admits volumes against
//! a profiled IOPS budget and throttles co-located volumes when a
//! reservation is violated; idle implementations are reclaimed.
//!
//! The [`sim`] module replays [`scenario`] files through the whole stack on a
//! discrete timeline, and [`experiment`] wraps that for the command line.

pub mod broker;
pub mod experiment;
pub mod manager;
pub mod model;
pub mod report;
pub mod scenario;
pub mod scheduler;
pub mod sim;
pub mod statedb;

pub use model::{LayoutKind, VolumeType};
pub use scenario::Scenario;
