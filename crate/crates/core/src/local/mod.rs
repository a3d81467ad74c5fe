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

//! Serial operators on a single partition.
//!
//! These are the local stage of every distributed pattern and, applied to
//! gathered data, the reference results the distributed operators are
//! checked against.

mod aggregate;
mod ep;
mod join;
mod setops;
mod sort;
mod window;

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

pub use aggregate::{
    groupby_combine, groupby_finalize, local_aggregate, local_groupby, AggFn, AggPartial, AggSpec,
};
pub use ep::{
    filter, map_column, project, row_aggregate, row_arithmetic, select, CmpOp, Expr, Predicate,
    RowAggFn,
};
pub use join::{join_output_schema, local_join, JoinKind, JoinSpec};
pub use setops::{local_difference, local_union, local_unique};
pub use sort::local_sort;
pub(crate) use sort::split_keys;
pub use window::local_rolling;
pub(crate) use aggregate::{aggregate_schema, finish_row, partials};
pub(crate) use window::rolling_schema;

use crate::table::{rows_equal, Table};

/// Hasher for keys that are already well-mixed 64-bit hashes.
#[derive(Default)]
pub(crate) struct IdentityHasher(u64);

impl Hasher for IdentityHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 = (self.0 << 8) | u64::from(*b);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = v;
    }
}

pub(crate) type HashIndex = HashMap<u64, u32, BuildHasherDefault<IdentityHasher>>;

const NIL: u32 = u32::MAX;

/// Distinct keys of a table, numbered in order of first occurrence.
pub(crate) struct Grouping {
    /// Group id of every row.
    pub group_of_row: Vec<u32>,
    /// First row of every group, ascending.
    pub first_rows: Vec<usize>,
    heads: HashIndex,
    next: Vec<u32>,
}

impl Grouping {
    pub fn build(table: &Table, cols: &[usize]) -> crate::Result<Grouping> {
        let hashes = crate::table::hash_rows(table, cols)?;
        let mut heads = HashIndex::default();
        let mut next: Vec<u32> = Vec::new();
        let mut first_rows = Vec::new();
        let mut group_of_row = Vec::with_capacity(table.len());
        for (row, &h) in hashes.iter().enumerate() {
            let head = heads.get(&h).copied().unwrap_or(NIL);
            let mut g = head;
            while g != NIL && !rows_equal(table, first_rows[g as usize], cols, table, row, cols) {
                g = next[g as usize];
            }
            if g == NIL {
                g = first_rows.len() as u32;
                first_rows.push(row);
                next.push(head);
                heads.insert(h, g);
            }
            group_of_row.push(g);
        }
        Ok(Grouping {
            group_of_row,
            first_rows,
            heads,
            next,
        })
    }

    pub fn len(&self) -> usize {
        self.first_rows.len()
    }

    /// Group whose key equals `probe[row]` on `probe_cols`, if any.
    pub fn find(
        &self,
        table: &Table,
        cols: &[usize],
        probe: &Table,
        row: usize,
        probe_cols: &[usize],
        hash: u64,
    ) -> Option<u32> {
        let mut g = self.heads.get(&hash).copied().unwrap_or(NIL);
        while g != NIL {
            if rows_equal(table, self.first_rows[g as usize], cols, probe, row, probe_cols) {
                return Some(g);
            }
            g = self.next[g as usize];
        }
        None
    }
}
