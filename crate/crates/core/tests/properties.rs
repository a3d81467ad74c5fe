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

//! Property tests for the table kernels and the partitioning operators.

mod common;

use bspframe::comm::inproc;
use bspframe::local::{groupby_combine, groupby_finalize, local_groupby, local_sort, AggFn, AggSpec};
use bspframe::partition::{
    compute_pivots, hash_partition, kway_merge, range_partition, rebalance, PivotSet,
};
use bspframe::table::wire::{deserialize_table, serialize_table};
use bspframe::table::{row_compare, row_hash};
use bspframe::{concat_tables, Column, Domain, Schema, SortKey, Table};
use common::*;
use proptest::prelude::*;

fn arb_table(max_rows: usize) -> impl Strategy<Value = Table> {
    let row = (
        -5i64..5,
        prop_oneof![Just(f64::NAN), Just(-0.0), Just(0.0), -10.0f64..10.0],
        "[a-c,\"\n]{0,3}",
    );
    proptest::collection::vec(row, 0..max_rows).prop_map(|rows| {
        let schema = Schema::from_pairs([("k", Domain::Int64), ("f", Domain::Float64), ("s", Domain::Utf8)]).unwrap();
        let k: Vec<i64> = rows.iter().map(|r| r.0).collect();
        let f: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let s: Vec<String> = rows.iter().map(|r| r.2.clone()).collect();
        Table::from_columns(schema, vec![k.into(), f.into(), s.into()]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wire_round_trip(t in arb_table(40)) {
        prop_assert_eq!(deserialize_table(&serialize_table(&t)).unwrap(), t);
    }

    #[test]
    fn equal_rows_hash_equally(t in arb_table(40)) {
        let cols = [0, 1, 2];
        for a in 0..t.len() {
            for b in 0..t.len() {
                if row_compare(&t, a, &t, b, &cols).unwrap().is_eq() {
                    prop_assert_eq!(row_hash(&t, &cols, a).unwrap(), row_hash(&t, &cols, b).unwrap());
                }
            }
        }
    }

    #[test]
    fn hash_partition_conserves_and_groups(t in arb_table(60), parts in 1usize..8) {
        let (assign, out) = hash_partition(&t, &[0, 1], parts).unwrap();
        prop_assert_eq!(assign.counts.iter().sum::<usize>(), t.len());
        for (p, o) in out.iter().enumerate() {
            prop_assert_eq!(o.len(), assign.counts[p]);
        }
        for a in 0..t.len() {
            for b in 0..t.len() {
                if row_compare(&t, a, &t, b, &[0, 1]).unwrap().is_eq() {
                    prop_assert_eq!(assign.target[a], assign.target[b]);
                }
            }
        }
        let all = concat_tables(t.schema_ref(), &out).unwrap();
        prop_assert_eq!(all.sort_canonical(), t.sort_canonical());
    }

    #[test]
    fn range_partition_orders_outputs(t in arb_table(60), pivots in proptest::collection::vec(-6i64..6, 0..5)) {
        let mut pivots = pivots;
        pivots.sort();
        let parts = pivots.len() + 1;
        let piv = Table::from_columns(
            Schema::from_pairs([("k", Domain::Int64)]).unwrap(),
            vec![Column::Int64(pivots)],
        ).unwrap();
        let ps = PivotSet { keys: vec![SortKey::asc(0)], pivots: piv, parts };
        let out = range_partition(&t, &ps).unwrap();
        for p in 0..out.len() {
            for q in p + 1..out.len() {
                for a in 0..out[p].len() {
                    for b in 0..out[q].len() {
                        prop_assert!(row_compare(&out[p], a, &out[q], b, &[0]).unwrap().is_le());
                    }
                }
            }
        }
        let all = concat_tables(t.schema_ref(), &out).unwrap();
        prop_assert_eq!(all.sort_canonical(), t.sort_canonical());
    }

    #[test]
    fn kway_merge_is_stable_sort(t in arb_table(80), cuts in proptest::collection::vec(0usize..80, 0..7)) {
        let keys = [SortKey::desc(0), SortKey::asc(1)];
        let mut bounds: Vec<usize> = cuts.into_iter().map(|c| c.min(t.len())).collect();
        bounds.push(0);
        bounds.push(t.len());
        bounds.sort();
        let runs: Vec<Table> = bounds
            .windows(2)
            .map(|w| local_sort(&t.slice_rows(w[0], w[1]).unwrap(), &keys).unwrap())
            .collect();
        let merged = kway_merge(&runs, &keys).unwrap();
        let serial = local_sort(&concat_tables(t.schema_ref(), &runs).unwrap(), &keys).unwrap();
        prop_assert_eq!(merged, serial);
    }

    #[test]
    fn combine_finalize_is_split_invariant(t in arb_table(60), cut in 0usize..60) {
        let cut = cut.min(t.len());
        let aggs = [AggSpec::new(AggFn::Count, 1), AggSpec::new(AggFn::Max, 1), AggSpec::new(AggFn::Min, 2)];
        let a = groupby_combine(&t.slice_rows(0, cut).unwrap(), &[0, 2], &aggs).unwrap();
        let b = groupby_combine(&t.slice_rows(cut, t.len()).unwrap(), &[0, 2], &aggs).unwrap();
        let schema = a.schema_ref().clone();
        let merged = groupby_finalize(&concat_tables(&schema, &[a, b]).unwrap(), 2, &aggs).unwrap();
        prop_assert_eq!(merged.sort_canonical(), local_groupby(&t, &[0, 2], &aggs).unwrap().sort_canonical());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rebalance_preserves_order(lens in proptest::collection::vec(0usize..30, 1..6)) {
        let total: usize = lens.iter().sum();
        let t = random_table(total, 7, total as u64);
        let mut starts = vec![0];
        for l in &lens {
            starts.push(starts.last().unwrap() + l);
        }
        let out = inproc::run(lens.len(), |ctx| {
            let r = ctx.rank();
            rebalance(&ctx, &t.slice_rows(starts[r], starts[r + 1]).unwrap(), None).unwrap()
        });
        let sizes: Vec<usize> = out.iter().map(Table::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(concat_tables(t.schema_ref(), &out).unwrap(), t);
    }

    #[test]
    fn pivots_identical_everywhere(lens in proptest::collection::vec(0usize..40, 2..5), samples in 1usize..20) {
        let keys = [SortKey::asc(0), SortKey::desc(2)];
        let out = inproc::run(lens.len(), |ctx| {
            let t = local_sort(&random_table(lens[ctx.rank()], 5, ctx.rank() as u64), &keys).unwrap();
            compute_pivots(&ctx, &t, &keys, samples).unwrap()
        });
        for p in &out {
            prop_assert_eq!(p, &out[0]);
            let n = p.pivots.len();
            prop_assert!(n == 0 || n == lens.len() - 1);
        }
    }
}
