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

//! Local operators against brute-force reference implementations.

mod common;

use std::collections::BTreeMap;

use bspframe::local::{
    local_aggregate, local_difference, local_groupby, local_join, local_rolling, local_sort,
    local_union, local_unique, AggFn, AggSpec, JoinSpec,
};
use bspframe::{SortKey, Table, Value};
use common::*;

#[test]
fn hash_join_matches_nested_loop() {
    for seed in 0..4 {
        let left = random_table(300, 40, seed);
        let right = random_table(120, 40, seed + 100).project(&["k", "v"]).unwrap();
        let spec = JoinSpec::inner(vec![0], vec![0]);
        let got = local_join(&left, &right, &spec).unwrap();
        let mut expected = Vec::new();
        for l in rows(&left) {
            for r in rows(&right) {
                if l[0] == r[0] {
                    let mut row = l.clone();
                    row.push(r[1].clone());
                    expected.push(row);
                }
            }
        }
        // left order, then right order within a left row
        assert_eq!(rows(&got), expected);
    }
}

#[test]
fn left_join_fills_unmatched() {
    let left = random_table(200, 80, 7);
    let right = random_table(30, 80, 8).project(&["k", "f"]).unwrap();
    let spec = JoinSpec::left(vec![0], vec![0], vec![Value::Float64(-9.0)]);
    let got = local_join(&left, &right, &spec).unwrap();
    let mut expected = Vec::new();
    for l in rows(&left) {
        let matches: Vec<_> = rows(&right).into_iter().filter(|r| r[0] == l[0]).collect();
        if matches.is_empty() {
            let mut row = l.clone();
            row.push(Value::Float64(-9.0));
            expected.push(row);
        }
        for r in matches {
            let mut row = l.clone();
            row.push(r[1].clone());
            expected.push(row);
        }
    }
    assert_eq!(rows(&got), expected);
}

#[test]
fn groupby_matches_btreemap() {
    let t = random_table(2000, 37, 3);
    let aggs: Vec<AggSpec> = AggFn::ALL.iter().map(|&f| AggSpec::new(f, 2)).collect();
    let got = local_groupby(&t, &[0], &aggs).unwrap();
    let mut groups: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for r in rows(&t) {
        let (Value::Int64(k), Value::Float64(x)) = (&r[0], &r[2]) else { unreachable!() };
        groups.entry(*k).or_default().push(*x);
    }
    let got = sorted_rows(rows(&got));
    assert_eq!(got.len(), groups.len());
    for (row, (k, xs)) in got.iter().zip(&groups) {
        let n = xs.len() as f64;
        let sum: f64 = xs.iter().sum();
        let mean = sum / n;
        // two-pass population variance
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expected = vec![
            Value::Int64(*k),
            Value::Float64(sum),
            Value::Int64(xs.len() as i64),
            Value::Float64(mean),
            Value::Float64(min),
            Value::Float64(max),
            Value::Float64(var.sqrt()),
        ];
        assert!(rows_close(std::slice::from_ref(row), std::slice::from_ref(&expected), 1e-9), "{row:?} vs {expected:?}");
    }
}

#[test]
fn aggregate_matches_fold() {
    let t = random_table(5000, 100, 4);
    let got = local_aggregate(
        &t,
        &[AggSpec::new(AggFn::Sum, 1), AggSpec::new(AggFn::Min, 3), AggSpec::new(AggFn::Max, 1)],
    )
    .unwrap();
    let r = rows(&t);
    let sum: i64 = r.iter().map(|x| if let Value::Int64(v) = x[1] { v } else { 0 }).sum();
    let min = r.iter().map(|x| x[3].clone()).min_by(cmp_value).unwrap();
    let max = r.iter().map(|x| x[1].clone()).max_by(cmp_value).unwrap();
    assert_eq!(got.row(0), vec![Value::Int64(sum), min, max]);
}

#[test]
fn sort_matches_insertion_sort() {
    let t = random_table(600, 20, 5);
    let keys = [SortKey::asc(0), SortKey::desc(3)];
    let got = local_sort(&t, &keys).unwrap();
    let mut expected = rows(&t);
    insertion_sort(&mut expected, |a, b| {
        cmp_value(&a[0], &b[0]).then(cmp_value(&b[3], &a[3])).is_lt()
    });
    assert_eq!(rows(&got), expected);
}

#[test]
fn set_ops_match_quadratic_scans() {
    let a = random_table(300, 15, 6).project(&["k", "s"]).unwrap();
    let b = random_table(200, 15, 9).project(&["k", "s"]).unwrap();
    let distinct = |r: Vec<Vec<Value>>| {
        let mut out: Vec<Vec<Value>> = Vec::new();
        for row in r {
            if !out.contains(&row) {
                out.push(row);
            }
        }
        out
    };
    let ra = rows(&a);
    let rb = rows(&b);
    assert_eq!(rows(&local_unique(&a, &[0, 1]).unwrap()), distinct(ra.clone()));
    let mut both = ra.clone();
    both.extend(rb.clone());
    assert_eq!(rows(&local_union(&a, &b).unwrap()), distinct(both));
    let diff = distinct(ra.into_iter().filter(|r| !rb.contains(r)).collect());
    assert_eq!(rows(&local_difference(&a, &b).unwrap()), diff);
}

#[test]
fn unique_on_key_keeps_first_occurrence() {
    let t = random_table(400, 30, 10);
    let got = local_unique(&t, &[0]).unwrap();
    let mut seen = Vec::new();
    let mut expected = Vec::new();
    for r in rows(&t) {
        if !seen.contains(&r[0]) {
            seen.push(r[0].clone());
            expected.push(r);
        }
    }
    assert_eq!(rows(&got), expected);
}

#[test]
fn rolling_matches_sliding_loop() {
    let t = random_table(250, 50, 11);
    for w in [1, 2, 5, 17, 250, 251] {
        for func in [AggFn::Sum, AggFn::Mean, AggFn::Max] {
            let got = local_rolling(&t, w, &AggSpec::new(func, 1)).unwrap();
            let v: Vec<i64> = rows(&t).iter().map(|r| if let Value::Int64(x) = r[1] { x } else { 0 }).collect();
            let mut expected = Vec::new();
            let mut end = w;
            while end <= v.len() {
                let win = &v[end - w..end];
                expected.push(match func {
                    AggFn::Sum => Value::Int64(win.iter().sum()),
                    AggFn::Max => Value::Int64(*win.iter().max().unwrap()),
                    _ => Value::Float64(win.iter().sum::<i64>() as f64 / w as f64),
                });
                end += 1;
            }
            let got: Vec<Value> = rows(&got).into_iter().map(|mut r| r.remove(0)).collect();
            assert_eq!(got, expected, "w={w} {func}");
        }
    }
}

#[test]
fn empty_inputs() {
    let t = random_table(0, 1, 0);
    assert!(local_groupby(&t, &[0], &[AggSpec::new(AggFn::Sum, 1)]).unwrap().is_empty());
    assert!(local_sort(&t, &[SortKey::asc(0)]).unwrap().is_empty());
    let _: Table = local_join(&t, &t, &JoinSpec::inner(vec![0], vec![0])).unwrap();
}
