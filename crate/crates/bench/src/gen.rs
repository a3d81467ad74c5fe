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

//! Seeded synthetic tables with a controlled number of distinct keys.

use bspframe::{Column, Domain, Field, Result, Schema, Table};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::workload::distinct_keys;

/// Exclusive upper bound of generated value columns.
pub const VALUE_RANGE: i64 = 1_000_000;

/// `rows` rows: int64 key column `k` followed by `value_columns` int64
/// columns `v0, v1, ..`. The key column holds exactly `round(C * rows)`
/// distinct values from the pool `0..D`: each pool value once, the rest
/// drawn uniformly, then shuffled. Same arguments, same table.
pub fn gen_table(rows: usize, value_columns: usize, cardinality: f64, seed: u64) -> Result<Table> {
    let d = distinct_keys(rows, cardinality)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keys: Vec<i64> = (0..d as i64).collect();
    keys.extend((d..rows).map(|_| rng.gen_range(0..d as i64)));
    keys.shuffle(&mut rng);
    let mut fields = vec![Field::new("k", Domain::Int64)];
    let mut columns = vec![Column::Int64(keys)];
    for c in 0..value_columns {
        fields.push(Field::new(format!("v{c}"), Domain::Int64));
        columns.push(Column::Int64((0..rows).map(|_| rng.gen_range(0..VALUE_RANGE)).collect()));
    }
    Table::from_columns(Schema::new(fields)?, columns)
}

/// Build side for join workloads: `rows` rows with keys uniform over the
/// same pool `0..distinct` and one int64 payload column `r0`.
pub fn gen_lookup_table(rows: usize, distinct: usize, seed: u64) -> Result<Table> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys = (0..rows).map(|_| rng.gen_range(0..distinct.max(1) as i64)).collect();
    let payload = (0..rows).map(|_| rng.gen_range(0..VALUE_RANGE)).collect();
    let schema = Schema::from_pairs([("k", Domain::Int64), ("r0", Domain::Int64)])?;
    Table::from_columns(schema, vec![Column::Int64(keys), Column::Int64(payload)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn distinct(t: &Table) -> usize {
        match t.column(0) {
            Column::Int64(v) => v.iter().collect::<HashSet<_>>().len(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn extreme_cardinalities() {
        let one = gen_table(500, 1, 1.0 / 500.0, 1).unwrap();
        assert_eq!(distinct(&one), 1);
        let all = gen_table(500, 1, 1.0, 1).unwrap();
        assert_eq!(distinct(&all), 500);
    }

    #[test]
    fn distinct_count_and_determinism() {
        let t = gen_table(1_000_000, 1, 1e-3, 42).unwrap();
        let d = distinct(&t) as f64;
        assert!((d - 1000.0).abs() <= 10.0, "{d}");
        let again = gen_table(1_000_000, 1, 1e-3, 42).unwrap();
        assert_eq!(
            bspframe::table::wire::serialize_table(&t),
            bspframe::table::wire::serialize_table(&again)
        );
        assert!(gen_table(10, 1, 0.0, 1).is_err());
    }
}
