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

//! Row routing between ranks: hash and range partitioning, regular-sampling
//! pivot selection, rebalancing and k-way merging of sorted runs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::comm::{NumericArray, WorkerContext};
use crate::error::{Error, Result};
use crate::local::local_sort;
use crate::table::{compare_rows, concat_tables, gather_pairs, hash_rows, Direction, SortKey, Table};

/// Destination rank of every row, plus per-destination counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionAssignment {
    pub target: Vec<u32>,
    pub counts: Vec<usize>,
}

impl PartitionAssignment {
    pub fn from_targets(target: Vec<u32>, parts: usize) -> Result<PartitionAssignment> {
        let mut counts = vec![0usize; parts];
        for &t in &target {
            let slot = counts.get_mut(t as usize).ok_or(Error::IndexOutOfBounds {
                index: t as usize,
                len: parts,
            })?;
            *slot += 1;
        }
        Ok(PartitionAssignment { target, counts })
    }

    pub fn parts(&self) -> usize {
        self.counts.len()
    }

    /// Splits `table` into one table per destination, keeping row order.
    pub fn split(&self, table: &Table) -> Result<Vec<Table>> {
        if self.target.len() != table.len() {
            return Err(Error::LengthMismatch(format!(
                "assignment covers {} rows, table has {}",
                self.target.len(),
                table.len()
            )));
        }
        if self.parts() == 1 {
            return Ok(vec![table.clone()]);
        }
        let mut rows: Vec<Vec<usize>> = self.counts.iter().map(|&c| Vec::with_capacity(c)).collect();
        for (r, &t) in self.target.iter().enumerate() {
            rows[t as usize].push(r);
        }
        rows.iter().map(|idx| table.take_rows(idx)).collect()
    }
}

fn check_parts(parts: usize) -> Result<()> {
    if parts == 0 {
        return Err(Error::Usage("partition count must be at least 1".into()));
    }
    Ok(())
}

/// Routes row `i` to `row_hash(i) mod parts`.
pub fn hash_partition(
    table: &Table,
    key_cols: &[usize],
    parts: usize,
) -> Result<(PartitionAssignment, Vec<Table>)> {
    check_parts(parts)?;
    let hashes = hash_rows(table, key_cols)?;
    let target = hashes.iter().map(|h| (h % parts as u64) as u32).collect();
    let assignment = PartitionAssignment::from_targets(target, parts)?;
    let tables = assignment.split(table)?;
    Ok((assignment, tables))
}

/// `parts - 1` splitter rows over the sort keys. Column `i` of `pivots`
/// holds key `keys[i]`. An empty pivot table with `parts > 1` sends every
/// row to rank 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotSet {
    pub keys: Vec<SortKey>,
    pub pivots: Table,
    pub parts: usize,
}

impl PivotSet {
    fn directions(&self) -> Vec<Direction> {
        self.keys.iter().map(|k| k.direction).collect()
    }
}

/// Indices of `samples` evenly spaced rows out of `len`, taken at the
/// midpoints of equal-width strata; all rows when `len <= samples`.
pub fn regular_sample_rows(len: usize, samples: usize) -> Vec<usize> {
    if len <= samples {
        return (0..len).collect();
    }
    (0..samples).map(|i| ((2 * i + 1) * len) / (2 * samples)).collect()
}

/// Default per-rank sample count.
pub fn default_sample_count(parts: usize) -> usize {
    parts.saturating_sub(1).max(16)
}

/// Regular-sampling pivot selection. Every rank samples its locally sorted
/// table, rank 0 sorts the gathered samples and picks `P - 1` evenly spaced
/// pivots, then broadcasts them. All ranks return the same set.
pub fn compute_pivots(
    ctx: &WorkerContext,
    sorted: &Table,
    keys: &[SortKey],
    samples: usize,
) -> Result<PivotSet> {
    let (cols, _) = crate::local::split_keys(sorted, keys)?;
    let parts = ctx.world_size();
    let projected_keys: Vec<SortKey> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| SortKey { column: i, direction: k.direction })
        .collect();
    let key_table = sorted.project_indices(&cols)?;
    if parts == 1 {
        return Ok(PivotSet {
            keys: projected_keys,
            pivots: Table::empty(key_table.schema_ref().clone()),
            parts,
        });
    }
    let sample = key_table.take_rows(&regular_sample_rows(sorted.len(), samples))?;
    let mut comm = ctx.comm();
    let gathered = comm.gather_table(&sample, 0)?;
    let chosen = match gathered {
        Some(all) => {
            let all = local_sort(&concat_tables(sample.schema_ref(), &all)?, &projected_keys)?;
            let m = all.len();
            let rows: Vec<usize> = if m == 0 {
                Vec::new()
            } else {
                (1..parts).map(|j| (j * m / parts).saturating_sub(1)).collect()
            };
            Some(all.take_rows(&rows)?)
        }
        None => None,
    };
    let pivots = comm.broadcast_table(chosen.as_ref(), 0)?;
    Ok(PivotSet { keys: projected_keys, pivots, parts })
}

/// Sends each row to the first rank whose pivot is not less than it; rows
/// above every pivot go to the last rank. Input order is kept per output.
pub fn range_partition(table: &Table, pivots: &PivotSet) -> Result<Vec<Table>> {
    check_parts(pivots.parts)?;
    let cols: Vec<usize> = pivots.keys.iter().map(|k| k.column).collect();
    let piv = &pivots.pivots;
    if cols.len() != piv.width() {
        return Err(Error::SchemaMismatch(format!(
            "{} sort keys but pivot table has {} columns",
            cols.len(),
            piv.width()
        )));
    }
    for (i, &c) in cols.iter().enumerate() {
        if c >= table.width() {
            return Err(Error::IndexOutOfBounds { index: c, len: table.width() });
        }
        let (have, want) = (table.schema().field(c).domain, piv.schema().field(i).domain);
        if have != want {
            return Err(Error::DomainMismatch(format!(
                "key column {c} is {have} but pivots are {want}"
            )));
        }
    }
    if pivots.parts == 1 {
        return Ok(vec![table.clone()]);
    }
    let target: Vec<u32> = if piv.is_empty() {
        vec![0; table.len()]
    } else {
        if piv.len() != pivots.parts - 1 {
            return Err(Error::LengthMismatch(format!(
                "{} pivots for {} partitions",
                piv.len(),
                pivots.parts
            )));
        }
        let dirs = pivots.directions();
        let piv_cols: Vec<usize> = (0..piv.width()).collect();
        (0..table.len())
            .map(|r| {
                let mut lo = 0;
                let mut hi = piv.len();
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    let ord = compare_rows(piv, mid, &piv_cols, table, r, &cols, Some(&dirs));
                    if ord == Ordering::Less {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                lo as u32
            })
            .collect()
    };
    PartitionAssignment::from_targets(target, pivots.parts)?.split(table)
}

/// Even split of `total` rows over `parts`; the first `total % parts`
/// ranks get one extra row.
pub fn even_targets(total: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|p| total / parts + usize::from(p < total % parts))
        .collect()
}

fn lengths(ctx: &WorkerContext, len: usize) -> Result<Vec<usize>> {
    let all = ctx
        .comm()
        .allgather_array(&NumericArray::Int64(vec![len as i64]))?;
    Ok(all
        .iter()
        .map(|a| a.as_i64().and_then(|v| v.first()).copied().unwrap_or(0) as usize)
        .collect())
}

fn overlap(a: (usize, usize), b: (usize, usize)) -> (usize, usize) {
    let start = a.0.max(b.0);
    let end = a.1.min(b.1);
    (start, end.max(start))
}

fn prefix(v: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(v.len() + 1);
    let mut acc = 0;
    out.push(0);
    for &x in v {
        acc += x;
        out.push(acc);
    }
    out
}

/// Moves rows so rank `p` ends up holding `targets[p]` rows (default: an
/// even split) while the rank-major global row order is kept. Only the
/// slices that change owner travel, point to point.
pub fn rebalance(ctx: &WorkerContext, table: &Table, targets: Option<&[usize]>) -> Result<Table> {
    let parts = ctx.world_size();
    let rank = ctx.rank();
    let lens = lengths(ctx, table.len())?;
    let total: usize = lens.iter().sum();
    let targets = match targets {
        Some(t) => {
            if t.len() != parts || t.iter().sum::<usize>() != total {
                return Err(Error::TargetMismatch(format!(
                    "targets {t:?} do not split {total} rows over {parts} ranks"
                )));
            }
            t.to_vec()
        }
        None => even_targets(total, parts),
    };
    if lens == targets {
        return Ok(table.clone());
    }
    let have = prefix(&lens);
    let want = prefix(&targets);
    let mine = (have[rank], have[rank + 1]);
    let mut comm = ctx.comm();
    for dest in (0..parts).filter(|&d| d != rank) {
        let (s, e) = overlap(mine, (want[dest], want[dest + 1]));
        if s < e {
            comm.send_table(&table.slice_rows(s - mine.0, e - mine.0)?, dest)?;
        }
    }
    let my_target = (want[rank], want[rank + 1]);
    let mut pieces = Vec::new();
    for src in 0..parts {
        let (s, e) = overlap((have[src], have[src + 1]), my_target);
        if s >= e {
            continue;
        }
        let piece = if src == rank {
            table.slice_rows(s - mine.0, e - mine.0)?
        } else {
            let t = comm.recv_table(src)?;
            if t.schema() != table.schema() || t.len() != e - s {
                return Err(Error::CollectiveMisuse(format!(
                    "rank {src} sent an unexpected rebalance slice"
                )));
            }
            t
        };
        pieces.push(piece);
    }
    concat_tables(table.schema_ref(), &pieces)
}

struct Head<'a> {
    tables: &'a [Table],
    cols: &'a [usize],
    dirs: &'a [Direction],
    input: usize,
    row: usize,
}

impl Head<'_> {
    fn order(&self, other: &Self) -> Ordering {
        compare_rows(
            &self.tables[self.input],
            self.row,
            self.cols,
            &other.tables[other.input],
            other.row,
            self.cols,
            Some(self.dirs),
        )
        .then(self.input.cmp(&other.input))
    }
}

impl PartialEq for Head<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.order(other) == Ordering::Equal
    }
}

impl Eq for Head<'_> {}

impl PartialOrd for Head<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Head<'_> {
    // BinaryHeap is a max-heap; reverse so the smallest head pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.order(self)
    }
}

/// Merges individually sorted tables into one sorted table. Ties keep
/// input order, then row order.
pub fn kway_merge(tables: &[Table], keys: &[SortKey]) -> Result<Table> {
    let first = tables
        .first()
        .ok_or_else(|| Error::Usage("merge needs at least one input".into()))?;
    let schema: Arc<_> = first.schema_ref().clone();
    if let Some(t) = tables.iter().find(|t| t.schema() != schema.as_ref()) {
        return Err(Error::SchemaMismatch(format!(
            "merge inputs disagree: {} vs {}",
            schema,
            t.schema()
        )));
    }
    let (cols, dirs) = crate::local::split_keys(first, keys)?;
    let live: Vec<usize> = (0..tables.len()).filter(|&i| !tables[i].is_empty()).collect();
    match live.as_slice() {
        [] => return Ok(Table::empty(schema)),
        [only] => return Ok(tables[*only].clone()),
        _ => {}
    }
    let total: usize = tables.iter().map(Table::len).sum();
    let mut heap = BinaryHeap::with_capacity(live.len());
    for input in live {
        heap.push(Head { tables, cols: &cols, dirs: &dirs, input, row: 0 });
    }
    let mut pairs = Vec::with_capacity(total);
    while let Some(mut head) = heap.pop() {
        pairs.push((head.input, head.row));
        head.row += 1;
        if head.row < tables[head.input].len() {
            heap.push(head);
        }
    }
    Ok(gather_pairs(&schema, tables, &pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::inproc;
    use crate::table::{Column, Domain, Schema};

    fn ints(v: Vec<i64>) -> Table {
        Table::from_columns(Schema::from_pairs([("k", Domain::Int64)]).unwrap(), vec![v.into()]).unwrap()
    }

    #[test]
    fn hash_partition_single_and_equal_keys() {
        let t = ints(vec![3, 1, 3, 2]);
        let (a, parts) = hash_partition(&t, &[0], 1).unwrap();
        assert_eq!(parts, vec![t.clone()]);
        assert_eq!(a.counts, vec![4]);
        let (a, _) = hash_partition(&t, &[0], 5).unwrap();
        assert_eq!(a.target[0], a.target[2]);
        assert!(hash_partition(&t, &[0], 0).is_err());
        assert!(matches!(hash_partition(&t, &[1], 2), Err(Error::IndexOutOfBounds { .. })));
    }

    #[test]
    fn range_partition_hand_checked() {
        let ps = PivotSet { keys: vec![SortKey::asc(0)], pivots: ints(vec![4]), parts: 2 };
        let out = range_partition(&ints(vec![5, 1, 9]), &ps).unwrap();
        assert_eq!(out, vec![ints(vec![1]), ints(vec![5, 9])]);
        // ties go left
        let out = range_partition(&ints(vec![4, 4]), &ps).unwrap();
        assert_eq!(out[0].len(), 2);
    }

    #[test]
    fn range_partition_descending() {
        let ps = PivotSet { keys: vec![SortKey::desc(0)], pivots: ints(vec![4]), parts: 2 };
        let out = range_partition(&ints(vec![5, 1, 9, 4]), &ps).unwrap();
        assert_eq!(out, vec![ints(vec![5, 9, 4]), ints(vec![1])]);
    }

    #[test]
    fn range_partition_domain_mismatch() {
        let s = Schema::from_pairs([("k", Domain::Float64)]).unwrap();
        let piv = Table::from_columns(s, vec![Column::Float64(vec![1.0])]).unwrap();
        let ps = PivotSet { keys: vec![SortKey::asc(0)], pivots: piv, parts: 2 };
        assert!(matches!(range_partition(&ints(vec![1]), &ps), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn empty_pivots_route_to_rank_zero() {
        let ps = PivotSet { keys: vec![SortKey::asc(0)], pivots: ints(vec![]), parts: 3 };
        let out = range_partition(&ints(vec![7, 8]), &ps).unwrap();
        assert_eq!(out.iter().map(Table::len).collect::<Vec<_>>(), vec![2, 0, 0]);
    }

    #[test]
    fn merge_two_runs() {
        let m = kway_merge(&[ints(vec![1, 3]), ints(vec![2, 4])], &[SortKey::asc(0)]).unwrap();
        assert_eq!(m, ints(vec![1, 2, 3, 4]));
        let t = ints(vec![1, 1, 2]);
        assert_eq!(kway_merge(std::slice::from_ref(&t), &[SortKey::asc(0)]).unwrap(), t);
    }

    #[test]
    fn pivots_single_rank_empty() {
        let ctx = WorkerContext::single();
        let ps = compute_pivots(&ctx, &ints(vec![1, 2, 3]), &[SortKey::asc(0)], 16).unwrap();
        assert!(ps.pivots.is_empty());
    }

    #[test]
    fn pivots_split_two_ranges() {
        let out = inproc::run(2, |ctx| {
            let base = ctx.rank() as i64 * 100;
            let t = ints((base + 1..=base + 100).collect());
            compute_pivots(&ctx, &t, &[SortKey::asc(0)], 10).unwrap()
        });
        assert_eq!(out[0], out[1]);
        assert_eq!(out[0].pivots.len(), 1);
        let p = match out[0].pivots.value(0, 0) {
            crate::table::ValueRef::Int64(v) => v,
            _ => unreachable!(),
        };
        // 10 samples below and 10 above on an exact split
        assert!((95..=105).contains(&p), "pivot {p}");
    }

    #[test]
    fn rebalance_moves_half() {
        let out = inproc::run(2, |ctx| {
            let t = if ctx.rank() == 0 { ints((0..10).collect()) } else { ints(vec![]) };
            rebalance(&ctx, &t, None).unwrap()
        });
        assert_eq!(out, vec![ints((0..5).collect()), ints((5..10).collect())]);
    }

    #[test]
    fn rebalance_balanced_is_silent_and_bad_targets_fail() {
        let out = inproc::run(3, |ctx| {
            let t = ints(vec![ctx.rank() as i64; 4]);
            let before = ctx.comm().counters();
            let same = rebalance(&ctx, &t, None).unwrap();
            let moved = ctx.comm().counters().since(&before).rows_shuffled;
            let err = rebalance(&ctx, &t, Some(&[1, 2, 3])).unwrap_err();
            (same == t, moved, matches!(err, Error::TargetMismatch(_)))
        });
        assert!(out.iter().all(|&(same, moved, err)| same && moved == 0 && err));
    }
}
