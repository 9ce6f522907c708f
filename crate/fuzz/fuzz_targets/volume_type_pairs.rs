// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

#![no_main]

use latebind_core::VolumeType;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if data.len() > 4096 {
        return;
    }
    if let Ok(vt) = VolumeType::parse_pairs(data, "fuzz") {
        // Re-serializing an accepted type must give back the same type.
        let map = vt.to_spec_map();
        let again = latebind_core::model::parse_volume_type(&map, "fuzz").expect("spec map parses");
        assert_eq!(vt, again);
    }
});
