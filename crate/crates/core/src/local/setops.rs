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

//! Set operations over whole rows and distinct-key selection.

use super::Grouping;
use crate::error::{Error, Result};
use crate::table::{concat_tables, hash_rows, Table};

fn all_columns(t: &Table) -> Vec<usize> {
    (0..t.width()).collect()
}

fn check_same_schema(a: &Table, b: &Table) -> Result<()> {
    if a.schema() != b.schema() {
        return Err(Error::SchemaMismatch(format!("{} vs {}", a.schema(), b.schema())));
    }
    Ok(())
}

/// First occurrence of every distinct key, in order of first occurrence.
pub fn local_unique(table: &Table, key_cols: &[usize]) -> Result<Table> {
    let g = Grouping::build(table, key_cols)?;
    if g.len() == table.len() {
        return Ok(table.clone());
    }
    table.take_rows(&g.first_rows)
}

/// Distinct rows of `a` followed by those of `b` not already seen.
pub fn local_union(a: &Table, b: &Table) -> Result<Table> {
    check_same_schema(a, b)?;
    let both = concat_tables(a.schema_ref(), &[a.clone(), b.clone()])?;
    local_unique(&both, &all_columns(a))
}

/// Distinct rows of `a` that have no equal row in `b`.
pub fn local_difference(a: &Table, b: &Table) -> Result<Table> {
    check_same_schema(a, b)?;
    let cols = all_columns(a);
    let in_b = Grouping::build(b, &cols)?;
    let distinct_a = Grouping::build(a, &cols)?;
    let hashes = hash_rows(a, &cols)?;
    let keep: Vec<usize> = distinct_a
        .first_rows
        .iter()
        .copied()
        .filter(|&r| in_b.find(b, &cols, a, r, &cols, hashes[r]).is_none())
        .collect();
    a.take_rows(&keep)
}
