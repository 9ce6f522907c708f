// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

#![no_main]

use latebind_core::Scenario;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if text.len() > 64 * 1024 {
        return;
    }
    if let Err(e) = text.parse::<Scenario>() {
        assert!(!e.diagnostics.is_empty());
    }
});
