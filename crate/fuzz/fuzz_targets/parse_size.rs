// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

#![no_main]

use latebind_core::model::parse_size;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = parse_size(data);
});
