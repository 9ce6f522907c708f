// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

//! Volume types: named requirement bundles carried as string key-value pairs.
//!
//! Recognized keys:
//!
//! | key        | meaning                                   |
//! |------------|-------------------------------------------|
//! | `jbod`     | `1`/`true` selects a single-disk layout   |
//! | `raid`     | RAID level, `5` or `6`                    |
//! | `width`    | RAID member count                         |
//! | `replicas` | replicated pool copy count                |
//! | `ec-k`     | erasure-coded pool data chunks            |
//! | `ec-m`     | erasure-coded pool coding chunks          |
//! | `min-iops` | per-volume IOPS reservation (default 0)   |
//! | `iosize`   | profiling block size (default 4k)         |
//!
//! Anything else is kept verbatim in [`VolumeType::extra`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::size::parse_size;
use super::LayoutKind;

pub const DEFAULT_IO_SIZE: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("key {key:?}: malformed value {value:?}")]
    Malformed { key: String, value: String },
    #[error("conflicting layout keys: {0}")]
    ConflictingLayout(String),
    #[error("missing key {0:?}")]
    MissingKey(&'static str),
    #[error("no layout key (one of jbod, raid, replicas, ec-k/ec-m)")]
    NoLayout,
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("malformed key-value pair {0:?}")]
    Pair(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeType {
    pub name: String,
    pub layout: LayoutKind,
    /// Per-volume reservation.
    pub min_iops: u64,
    pub io_size: u64,
    pub extra: BTreeMap<String, String>,
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ParseError> {
    value.trim().parse().map_err(|_| ParseError::Malformed {
        key: key.to_owned(),
        value: value.to_owned(),
    })
}

fn flag(key: &str, value: &str) -> Result<bool, ParseError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        _ => Err(ParseError::Malformed {
            key: key.to_owned(),
            value: value.to_owned(),
        }),
    }
}

/// Builds a typed volume type from its key-value description.
pub fn parse_volume_type(
    spec: &BTreeMap<String, String>,
    name: &str,
) -> Result<VolumeType, ParseError> {
    let mut jbod = false;
    let mut raid_level: Option<u32> = None;
    let mut width: Option<u32> = None;
    let mut replicas: Option<u32> = None;
    let mut ec_k: Option<u32> = None;
    let mut ec_m: Option<u32> = None;
    let mut min_iops = 0u64;
    let mut io_size = DEFAULT_IO_SIZE;
    let mut extra = BTreeMap::new();

    for (key, value) in spec {
        match key.as_str() {
            "jbod" => jbod = flag(key, value)?,
            "raid" => {
                let level: u32 = number(key, value)?;
                if level != 5 && level != 6 {
                    return Err(ParseError::Layout(format!(
                        "unsupported raid level {level} (expected 5 or 6)"
                    )));
                }
                raid_level = Some(level);
            }
            "width" => width = Some(number(key, value)?),
            "replicas" => replicas = Some(number(key, value)?),
            "ec-k" => ec_k = Some(number(key, value)?),
            "ec-m" => ec_m = Some(number(key, value)?),
            "min-iops" => min_iops = number(key, value)?,
            "iosize" => {
                io_size = parse_size(value).map_err(|_| ParseError::Malformed {
                    key: key.clone(),
                    value: value.clone(),
                })?
            }
            _ => {
                extra.insert(key.clone(), value.clone());
            }
        }
    }

    let mut families = Vec::new();
    if jbod {
        families.push("jbod");
    }
    if raid_level.is_some() || width.is_some() {
        families.push("raid");
    }
    if replicas.is_some() {
        families.push("replicas");
    }
    if ec_k.is_some() || ec_m.is_some() {
        families.push("ec");
    }
    if families.len() > 1 {
        return Err(ParseError::ConflictingLayout(families.join(" + ")));
    }

    let layout = match families.first().copied() {
        None => return Err(ParseError::NoLayout),
        Some("jbod") => LayoutKind::Jbod,
        Some("raid") => {
            let level = raid_level.ok_or(ParseError::MissingKey("raid"))?;
            let width = width.ok_or(ParseError::MissingKey("width"))?;
            LayoutKind::raid(width, level - 4).map_err(|e| ParseError::Layout(e.to_string()))?
        }
        Some("replicas") => LayoutKind::replicated(replicas.unwrap_or_default())
            .map_err(|e| ParseError::Layout(e.to_string()))?,
        Some(_) => {
            let k = ec_k.ok_or(ParseError::MissingKey("ec-k"))?;
            let m = ec_m.ok_or(ParseError::MissingKey("ec-m"))?;
            LayoutKind::erasure_coded(k, m).map_err(|e| ParseError::Layout(e.to_string()))?
        }
    };

    Ok(VolumeType {
        name: name.to_owned(),
        layout,
        min_iops,
        io_size,
        extra,
    })
}

impl VolumeType {
    /// Parses the comma-separated form, e.g. `raid=6,width=4,min-iops=100`.
    pub fn parse_pairs(input: &str, name: &str) -> Result<Self, ParseError> {
        let mut map = BTreeMap::new();
        for pair in input.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| ParseError::Pair(pair.to_owned()))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(ParseError::Pair(pair.to_owned()));
            }
            map.insert(k.to_owned(), v.trim().to_owned());
        }
        parse_volume_type(&map, name)
    }

    /// Key-value form that parses back to `self`.
    pub fn to_spec_map(&self) -> BTreeMap<String, String> {
        let mut map = self.extra.clone();
        let mut put = |k: &str, v: String| {
            map.insert(k.to_owned(), v);
        };
        match self.layout {
            LayoutKind::Jbod => put("jbod", "1".into()),
            LayoutKind::Raid {
                width,
                parity_count,
            } => {
                put("raid", (parity_count + 4).to_string());
                put("width", width.to_string());
            }
            LayoutKind::ReplicatedPool { replicas } => put("replicas", replicas.to_string()),
            LayoutKind::ErasureCodedPool { k, m } => {
                put("ec-k", k.to_string());
                put("ec-m", m.to_string());
            }
        }
        put("min-iops", self.min_iops.to_string());
        put("iosize", self.io_size.to_string());
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn raid6_with_reservation() {
        let vt = parse_volume_type(
            &map(&[
                ("raid", "6"),
                ("width", "4"),
                ("min-iops", "100"),
                ("iosize", "4k"),
            ]),
            "Type 2",
        )
        .unwrap();
        assert_eq!(
            vt.layout,
            LayoutKind::Raid {
                width: 4,
                parity_count: 2
            }
        );
        assert_eq!(vt.min_iops, 100);
        assert_eq!(vt.io_size, 4096);
        assert!(vt.extra.is_empty());
    }

    #[test]
    fn jbod_defaults_to_no_reservation() {
        let vt = parse_volume_type(&map(&[("jbod", "1")]), "Type 3").unwrap();
        assert_eq!(vt.layout, LayoutKind::Jbod);
        assert_eq!(vt.min_iops, 0);
        assert_eq!(vt.io_size, DEFAULT_IO_SIZE);
    }

    #[test]
    fn erasure_coded_pool() {
        let vt = parse_volume_type(&map(&[("ec-k", "6"), ("ec-m", "3")]), "ec").unwrap();
        assert_eq!(vt.layout, LayoutKind::ErasureCodedPool { k: 6, m: 3 });
        assert_eq!(vt.min_iops, 0);
    }

    #[test]
    fn unknown_keys_are_kept() {
        let vt = VolumeType::parse_pairs("replicas=3, redundancy=5, tier=gold", "vdi").unwrap();
        assert_eq!(vt.layout, LayoutKind::ReplicatedPool { replicas: 3 });
        assert_eq!(vt.extra.get("redundancy").map(String::as_str), Some("5"));
        assert_eq!(vt.extra.get("tier").map(String::as_str), Some("gold"));
    }

    #[test]
    fn malformed_number_names_key() {
        let err = parse_volume_type(&map(&[("jbod", "1"), ("min-iops", "lots")]), "x").unwrap_err();
        assert_eq!(
            err,
            ParseError::Malformed {
                key: "min-iops".into(),
                value: "lots".into()
            }
        );
        assert!(err.to_string().contains("min-iops"));
        let err = parse_volume_type(&map(&[("raid", "6"), ("width", "-4")]), "x").unwrap_err();
        assert!(matches!(err, ParseError::Malformed { key, .. } if key == "width"));
    }

    #[test]
    fn contradictory_layouts() {
        let err = parse_volume_type(
            &map(&[("raid", "6"), ("width", "4"), ("ec-k", "6"), ("ec-m", "3")]),
            "x",
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::ConflictingLayout(_)));
        assert!(matches!(
            parse_volume_type(&map(&[("jbod", "true"), ("replicas", "3")]), "x"),
            Err(ParseError::ConflictingLayout(_))
        ));
    }

    #[test]
    fn incomplete_layouts() {
        assert_eq!(
            parse_volume_type(&map(&[("raid", "5")]), "x"),
            Err(ParseError::MissingKey("width"))
        );
        assert_eq!(
            parse_volume_type(&map(&[("width", "5")]), "x"),
            Err(ParseError::MissingKey("raid"))
        );
        assert_eq!(
            parse_volume_type(&map(&[("ec-k", "5")]), "x"),
            Err(ParseError::MissingKey("ec-m"))
        );
        assert_eq!(
            parse_volume_type(&map(&[("min-iops", "5")]), "x"),
            Err(ParseError::NoLayout)
        );
        assert_eq!(
            parse_volume_type(&map(&[("jbod", "0")]), "x"),
            Err(ParseError::NoLayout)
        );
        assert!(matches!(
            parse_volume_type(&map(&[("raid", "1"), ("width", "2")]), "x"),
            Err(ParseError::Layout(_))
        ));
        assert!(matches!(
            parse_volume_type(&map(&[("raid", "6"), ("width", "2")]), "x"),
            Err(ParseError::Layout(_))
        ));
    }

    #[test]
    fn pair_syntax() {
        assert!(matches!(
            VolumeType::parse_pairs("jbod", "x"),
            Err(ParseError::Pair(_))
        ));
        assert!(matches!(
            VolumeType::parse_pairs("=1", "x"),
            Err(ParseError::Pair(_))
        ));
    }

    fn any_volume_type() -> impl Strategy<Value = VolumeType> {
        let layout = prop_oneof![
            Just(LayoutKind::Jbod),
            (3u32..=12, 1u32..=2).prop_map(|(w, p)| LayoutKind::Raid {
                width: w,
                parity_count: p
            }),
            (1u32..=5).prop_map(|r| LayoutKind::ReplicatedPool { replicas: r }),
            (1u32..=12, 0u32..=4).prop_map(|(k, m)| LayoutKind::ErasureCodedPool { k, m }),
        ];
        let extra = prop::collection::btree_map("[a-z]{1,3}-x[a-z]{0,4}", "[a-z0-9=]{0,6}", 0..3);
        (layout, any::<u64>(), 1u64..(1 << 30), extra).prop_map(
            |(layout, min_iops, io_size, extra)| VolumeType {
                name: "t".into(),
                layout,
                min_iops,
                io_size,
                extra,
            },
        )
    }

    proptest! {
        #[test]
        fn reserialization_is_idempotent(vt in any_volume_type()) {
            let once = parse_volume_type(&vt.to_spec_map(), &vt.name).unwrap();
            prop_assert_eq!(&once, &vt);
            let twice = parse_volume_type(&once.to_spec_map(), &once.name).unwrap();
            prop_assert_eq!(twice, once);
        }
    }
}
