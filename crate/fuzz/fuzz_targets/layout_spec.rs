// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Parses layout specs and checks that accepted ones print back to an
//! equal layout.

#![no_main]

use latebind_core::LayoutKind;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(layout) = data.parse::<LayoutKind>() {
        let again: LayoutKind = layout.to_string().parse().expect("printed layout parses");
        assert_eq!(layout, again);
        let _ = layout.disks_required();
        let _ = layout.fault_tolerance();
    }
});
