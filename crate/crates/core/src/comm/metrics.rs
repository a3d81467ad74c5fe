// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Per-operation communication counters and phase timings.

use std::collections::BTreeMap;
use std::time::Duration;

/// Cumulative counters kept by a communicator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Rows carried by tables sent to other ranks.
    pub rows_shuffled: u64,
    /// Serialized table bytes sent to other ranks.
    pub table_bytes_sent: u64,
    /// All frame bytes sent (headers included).
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub messages_sent: u64,
}

impl Counters {
    pub fn since(&self, earlier: &Counters) -> Counters {
        Counters {
            rows_shuffled: self.rows_shuffled - earlier.rows_shuffled,
            table_bytes_sent: self.table_bytes_sent - earlier.table_bytes_sent,
            bytes_sent: self.bytes_sent - earlier.bytes_sent,
            bytes_received: self.bytes_received - earlier.bytes_received,
            messages_sent: self.messages_sent - earlier.messages_sent,
        }
    }
}

pub const PHASE_PARTITION: &str = "partition";
pub const PHASE_COMM: &str = "comm";
pub const PHASE_LOCAL: &str = "local";

/// Metrics of one distributed operator call on one rank.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OpMetrics {
    pub rows_shuffled: u64,
    pub table_bytes_sent: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub messages_sent: u64,
    pub phases: BTreeMap<String, Duration>,
    pub total: Duration,
}

impl OpMetrics {
    pub fn from_counters(c: Counters) -> Self {
        OpMetrics {
            rows_shuffled: c.rows_shuffled,
            table_bytes_sent: c.table_bytes_sent,
            bytes_sent: c.bytes_sent,
            bytes_received: c.bytes_received,
            messages_sent: c.messages_sent,
            ..Default::default()
        }
    }

    pub fn add_phase(&mut self, name: &str, d: Duration) {
        *self.phases.entry(name.to_string()).or_default() += d;
    }

    pub fn phase(&self, name: &str) -> Duration {
        self.phases.get(name).copied().unwrap_or_default()
    }
}
