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

//! Row-level hash and comparison kernels.
//!
//! The hash is seedless and platform independent so that every worker assigns
//! the same partition to key-equal rows. Float64 keys are canonicalised first:
//! all NaNs hash alike and `-0.0` hashes like `0.0`, matching the comparator.

use std::cmp::Ordering;
use std::hash::{Hash, Hasher};

use super::{Column, Table};
use crate::error::{Error, Result};

const HASH_SEED: u64 = 0x9e37_79b9_7f4a_7c15;
const CANONICAL_NAN: u64 = 0x7ff8_0000_0000_0000;

/// Sort direction of one key column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Direction {
    #[default]
    Ascending,
    Descending,
}

/// A key column together with its sort direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SortKey {
    pub column: usize,
    pub direction: Direction,
}

impl SortKey {
    pub fn asc(column: usize) -> Self {
        SortKey {
            column,
            direction: Direction::Ascending,
        }
    }

    pub fn desc(column: usize) -> Self {
        SortKey {
            column,
            direction: Direction::Descending,
        }
    }
}

/// Total order on f64: NaN is greater than every number and equal to itself,
/// and `-0.0 == 0.0`.
#[inline]
pub fn compare_f64(a: f64, b: f64) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => a.partial_cmp(&b).expect("non-NaN"),
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn f64_bits(v: f64) -> u64 {
    if v.is_nan() {
        CANONICAL_NAN
    } else if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

#[inline]
fn str_hash(s: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ (s.len() as u64)
}

#[inline]
fn combine(h: u64, v: u64) -> u64 {
    mix64(h.rotate_left(17) ^ v)
}

fn check_cols(table: &Table, cols: &[usize]) -> Result<()> {
    if cols.is_empty() {
        return Err(Error::Usage("key column list is empty".into()));
    }
    if let Some(&bad) = cols.iter().find(|&&c| c >= table.width()) {
        return Err(Error::IndexOutOfBounds {
            index: bad,
            len: table.width(),
        });
    }
    Ok(())
}

/// Hash of the key values of one row.
pub fn row_hash(table: &Table, key_cols: &[usize], row: usize) -> Result<u64> {
    check_cols(table, key_cols)?;
    if row >= table.len() {
        return Err(Error::IndexOutOfBounds {
            index: row,
            len: table.len(),
        });
    }
    Ok(row_hash_unchecked(table, key_cols, row))
}

#[inline]
pub(crate) fn row_hash_unchecked(table: &Table, key_cols: &[usize], row: usize) -> u64 {
    let mut h = HASH_SEED;
    for &c in key_cols {
        let v = match table.column(c) {
            Column::Int64(v) => v[row] as u64,
            Column::Float64(v) => f64_bits(v[row]),
            Column::Utf8(v) => str_hash(&v[row]),
        };
        h = combine(h, v);
    }
    h
}

/// Column-at-a-time hash of every row; element `i` equals
/// `row_hash(table, key_cols, i)`.
pub fn hash_rows(table: &Table, key_cols: &[usize]) -> Result<Vec<u64>> {
    check_cols(table, key_cols)?;
    let mut hashes = vec![HASH_SEED; table.len()];
    for &c in key_cols {
        match table.column(c) {
            Column::Int64(v) => hashes
                .iter_mut()
                .zip(v)
                .for_each(|(h, x)| *h = combine(*h, *x as u64)),
            Column::Float64(v) => hashes
                .iter_mut()
                .zip(v)
                .for_each(|(h, x)| *h = combine(*h, f64_bits(*x))),
            Column::Utf8(v) => hashes
                .iter_mut()
                .zip(v)
                .for_each(|(h, x)| *h = combine(*h, str_hash(x))),
        }
    }
    Ok(hashes)
}

/// Secondary hash used to split a rank's rows into local sub-partitions
/// without correlating with the rank assignment.
#[inline]
pub(crate) fn rehash(h: u64) -> u64 {
    mix64(h ^ 0x2545_f491_4f6c_dd1d)
}

#[inline]
fn compare_cells(a: &Column, ra: usize, b: &Column, rb: usize) -> Ordering {
    match (a, b) {
        (Column::Int64(x), Column::Int64(y)) => x[ra].cmp(&y[rb]),
        (Column::Float64(x), Column::Float64(y)) => compare_f64(x[ra], y[rb]),
        (Column::Utf8(x), Column::Utf8(y)) => x[ra].cmp(&y[rb]),
        (x, y) => x.domain().tag().cmp(&y.domain().tag()),
    }
}

/// Lexicographic comparison of `a[ra]` on `a_cols` against `b[rb]` on
/// `b_cols`. `directions`, when given, flips individual key positions.
/// Domains are expected to match pairwise.
#[inline]
pub fn compare_rows(
    a: &Table,
    ra: usize,
    a_cols: &[usize],
    b: &Table,
    rb: usize,
    b_cols: &[usize],
    directions: Option<&[Direction]>,
) -> Ordering {
    for (i, (&ca, &cb)) in a_cols.iter().zip(b_cols).enumerate() {
        let ord = compare_cells(a.column(ca), ra, b.column(cb), rb);
        if ord != Ordering::Equal {
            return match directions.and_then(|d| d.get(i)) {
                Some(Direction::Descending) => ord.reverse(),
                _ => ord,
            };
        }
    }
    Ordering::Equal
}

/// Ascending lexicographic comparison of two rows on the same key columns.
pub fn row_compare(
    a: &Table,
    ra: usize,
    b: &Table,
    rb: usize,
    key_cols: &[usize],
) -> Result<Ordering> {
    check_cols(a, key_cols)?;
    check_cols(b, key_cols)?;
    for &c in key_cols {
        let (da, db) = (a.schema().field(c).domain, b.schema().field(c).domain);
        if da != db {
            return Err(Error::DomainMismatch(format!(
                "key column {c}: {da} vs {db}"
            )));
        }
    }
    for (t, r) in [(a, ra), (b, rb)] {
        if r >= t.len() {
            return Err(Error::IndexOutOfBounds {
                index: r,
                len: t.len(),
            });
        }
    }
    Ok(compare_rows(a, ra, key_cols, b, rb, key_cols, None))
}

/// Key equality; consistent with the hash (equal rows hash equally).
#[inline]
pub fn rows_equal(
    a: &Table,
    ra: usize,
    a_cols: &[usize],
    b: &Table,
    rb: usize,
    b_cols: &[usize],
) -> bool {
    a_cols.iter().zip(b_cols).all(|(&ca, &cb)| {
        match (a.column(ca), b.column(cb)) {
            (Column::Int64(x), Column::Int64(y)) => x[ra] == y[rb],
            (Column::Float64(x), Column::Float64(y)) => compare_f64(x[ra], y[rb]).is_eq(),
            (Column::Utf8(x), Column::Utf8(y)) => x[ra] == y[rb],
            _ => false,
        }
    })
}

/// Borrowed key of one row, usable in std hash maps and ordered collections.
#[derive(Debug, Clone, Copy)]
pub struct RowKey<'a> {
    pub table: &'a Table,
    pub row: usize,
    pub cols: &'a [usize],
}

impl<'a> RowKey<'a> {
    pub fn new(table: &'a Table, row: usize, cols: &'a [usize]) -> Self {
        RowKey { table, row, cols }
    }
}

impl PartialEq for RowKey<'_> {
    fn eq(&self, other: &Self) -> bool {
        rows_equal(
            self.table,
            self.row,
            self.cols,
            other.table,
            other.row,
            other.cols,
        )
    }
}

impl Eq for RowKey<'_> {}

impl PartialOrd for RowKey<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RowKey<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_rows(
            self.table,
            self.row,
            self.cols,
            other.table,
            other.row,
            other.cols,
            None,
        )
    }
}

impl Hash for RowKey<'_> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(row_hash_unchecked(self.table, self.cols, self.row));
    }
}
