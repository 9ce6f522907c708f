// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Byte-size strings.
//!
//! Single-letter suffixes follow the block-device convention (`4k` is 4096
//! bytes, same as fio and dd). Two-letter SI suffixes are decimal (`1TB` is
//! 10^12 bytes, the way drive capacities are quoted) and IEC suffixes are
//! binary (`1TiB`).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SizeError {
    #[error("empty size string")]
    Empty,
    #[error("invalid size {0:?}")]
    Invalid(String),
    #[error("unknown size suffix {0:?}")]
    UnknownSuffix(String),
    #[error("size {0:?} overflows 64 bits")]
    Overflow(String),
}

const KIB: u64 = 1 << 10;
const KB: u64 = 1000;

fn suffix_multiplier(suffix: &str) -> Option<u64> {
    let m = match suffix {
        "" | "b" | "B" => 1,
        "k" | "K" | "KiB" => KIB,
        "m" | "M" | "MiB" => KIB.pow(2),
        "g" | "G" | "GiB" => KIB.pow(3),
        "t" | "T" | "TiB" => KIB.pow(4),
        "KB" | "kB" => KB,
        "MB" => KB.pow(2),
        "GB" => KB.pow(3),
        "TB" => KB.pow(4),
        "PB" => KB.pow(5),
        _ => return None,
    };
    Some(m)
}

/// Parses a byte size such as `4096`, `4k`, `100GB` or `1TiB`.
pub fn parse_size(input: &str) -> Result<u64, SizeError> {
    let s = input.trim();
    if s.is_empty() {
        return Err(SizeError::Empty);
    }
    let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let (digits, suffix) = s.split_at(split);
    if digits.is_empty() {
        return Err(SizeError::Invalid(input.to_owned()));
    }
    let value: u64 = digits
        .parse()
        .map_err(|_| SizeError::Overflow(input.to_owned()))?;
    let mult = suffix_multiplier(suffix.trim_start())
        .ok_or_else(|| SizeError::UnknownSuffix(suffix.to_owned()))?;
    value
        .checked_mul(mult)
        .ok_or_else(|| SizeError::Overflow(input.to_owned()))
}
