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

//! Shared fixtures and brute-force oracles for the integration tests.

#![allow(dead_code)]

use std::cmp::Ordering;

use bspframe::{Column, Domain, Schema, Table, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `k` (int64, `distinct` values), `v` (int64), `f` (float64), `s` (utf8).
pub fn random_table(rows: usize, distinct: i64, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k: Vec<i64> = (0..rows).map(|_| rng.gen_range(0..distinct.max(1))).collect();
    let v: Vec<i64> = (0..rows).map(|_| rng.gen_range(-1000..1000)).collect();
    let f: Vec<f64> = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let s: Vec<String> = (0..rows).map(|_| format!("s{}", rng.gen_range(0..distinct.max(1) * 2))).collect();
    let schema = Schema::from_pairs([
        ("k", Domain::Int64),
        ("v", Domain::Int64),
        ("f", Domain::Float64),
        ("s", Domain::Utf8),
    ])
    .unwrap();
    Table::from_columns(schema, vec![k.into(), v.into(), f.into(), s.into()]).unwrap()
}

/// Random contiguous split of `t` into `parts` pieces (some may be empty).
pub fn split(t: &Table, parts: usize, seed: u64) -> Vec<Table> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut cuts: Vec<usize> = (0..parts - 1).map(|_| rng.gen_range(0..=t.len())).collect();
    cuts.sort();
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(t.len());
    bounds.windows(2).map(|w| t.slice_rows(w[0], w[1]).unwrap()).collect()
}

pub fn rows(t: &Table) -> Vec<Vec<Value>> {
    (0..t.len()).map(|r| t.row(r)).collect()
}

pub fn cmp_value(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Int64(x), Value::Int64(y)) => x.cmp(y),
        (Value::Float64(x), Value::Float64(y)) => match (x.is_nan(), y.is_nan()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            _ => x.partial_cmp(y).unwrap(),
        },
        (Value::Utf8(x), Value::Utf8(y)) => x.cmp(y),
        _ => panic!("mixed domains"),
    }
}

pub fn cmp_row(a: &[Value], b: &[Value]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| cmp_value(x, y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

pub fn sorted_rows(mut r: Vec<Vec<Value>>) -> Vec<Vec<Value>> {
    r.sort_by(|a, b| cmp_row(a, b));
    r
}

pub fn table_of(schema: &Schema, rows: &[Vec<Value>]) -> Table {
    let mut cols: Vec<Column> = schema.domains().map(Column::empty).collect();
    for row in rows {
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v.as_ref()).unwrap();
        }
    }
    Table::from_columns(schema.clone(), cols).unwrap()
}

/// Insertion sort: stable by construction.
pub fn insertion_sort<T>(items: &mut [T], mut less: impl FnMut(&T, &T) -> bool) {
    for i in 1..items.len() {
        let mut j = i;
        while j > 0 && less(&items[j], &items[j - 1]) {
            items.swap(j, j - 1);
            j -= 1;
        }
    }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300) || (a.is_nan() && b.is_nan())
}

/// Row equality with a relative tolerance on floats.
pub fn rows_close(a: &[Vec<Value>], b: &[Vec<Value>], rel: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.len() == y.len()
                && x.iter().zip(y).all(|(p, q)| match (p, q) {
                    (Value::Float64(p), Value::Float64(q)) => close(*p, *q, rel),
                    _ => p == q,
                })
        })
}
