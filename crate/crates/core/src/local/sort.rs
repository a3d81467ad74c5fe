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

use crate::error::{Error, Result};
use crate::table::{compare_rows, Direction, SortKey, Table};

pub(crate) fn split_keys(table: &Table, keys: &[SortKey]) -> Result<(Vec<usize>, Vec<Direction>)> {
    if keys.is_empty() {
        return Err(Error::Usage("sort needs at least one key".into()));
    }
    if let Some(k) = keys.iter().find(|k| k.column >= table.width()) {
        return Err(Error::IndexOutOfBounds {
            index: k.column,
            len: table.width(),
        });
    }
    Ok((
        keys.iter().map(|k| k.column).collect(),
        keys.iter().map(|k| k.direction).collect(),
    ))
}

/// Stable sort by `keys`, each with its own direction.
pub fn local_sort(table: &Table, keys: &[SortKey]) -> Result<Table> {
    let (cols, dirs) = split_keys(table, keys)?;
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| compare_rows(table, a, &cols, table, b, &cols, Some(&dirs)));
    if order.iter().enumerate().all(|(i, &r)| i == r) {
        return Ok(table.clone());
    }
    table.take_rows(&order)
}
