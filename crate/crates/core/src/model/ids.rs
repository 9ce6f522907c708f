// Copyright 2026 The latebind Authors.
// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// Storage node identifier.
    NodeId
);
string_id!(
    /// Disk identifier, unique within a node.
    DiskId
);
string_id!(
    /// Storage implementation identifier, unique cluster-wide.
    ImplId
);
string_id!(
    /// Logical volume identifier, unique cluster-wide.
    VolumeId
);
string_id!(RequestId);
string_id!(
    /// Compute instance a volume can be attached to.
    InstanceId
);
