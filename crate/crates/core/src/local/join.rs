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

//! Hash join of two partitions.

use std::sync::Arc;

use super::{HashIndex, NIL};
use crate::error::{Error, Result};
use crate::table::{hash_rows, rows_equal, Column, Field, Schema, Table, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum JoinKind {
    Inner,
    /// Unmatched left rows are kept; their right value columns take `fill`
    /// (one value per right non-key column, in order).
    Left { fill: Vec<Value> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinSpec {
    pub kind: JoinKind,
    pub left_keys: Vec<usize>,
    pub right_keys: Vec<usize>,
}

impl JoinSpec {
    pub fn inner(left_keys: Vec<usize>, right_keys: Vec<usize>) -> JoinSpec {
        JoinSpec {
            kind: JoinKind::Inner,
            left_keys,
            right_keys,
        }
    }

    pub fn left(left_keys: Vec<usize>, right_keys: Vec<usize>, fill: Vec<Value>) -> JoinSpec {
        JoinSpec {
            kind: JoinKind::Left { fill },
            left_keys,
            right_keys,
        }
    }

    /// Checks key arity and domains, and the fill values of a left join.
    pub fn validate(&self, left: &Schema, right: &Schema) -> Result<()> {
        if self.left_keys.is_empty() || self.left_keys.len() != self.right_keys.len() {
            return Err(Error::Usage(format!(
                "join keys must be non-empty and of equal arity ({} vs {})",
                self.left_keys.len(),
                self.right_keys.len()
            )));
        }
        for (&l, &r) in self.left_keys.iter().zip(&self.right_keys) {
            if l >= left.width() {
                return Err(Error::IndexOutOfBounds { index: l, len: left.width() });
            }
            if r >= right.width() {
                return Err(Error::IndexOutOfBounds { index: r, len: right.width() });
            }
            let (dl, dr) = (left.field(l).domain, right.field(r).domain);
            if dl != dr {
                return Err(Error::DomainMismatch(format!(
                    "join key `{}` is {dl} but `{}` is {dr}",
                    left.field(l).name,
                    right.field(r).name
                )));
            }
        }
        if let JoinKind::Left { fill } = &self.kind {
            let values = self.right_value_columns(right);
            if fill.len() != values.len() {
                return Err(Error::Usage(format!(
                    "left join needs {} fill values, got {}",
                    values.len(),
                    fill.len()
                )));
            }
            for (v, &c) in fill.iter().zip(&values) {
                if v.domain() != right.field(c).domain {
                    return Err(Error::DomainMismatch(format!(
                        "fill for `{}` is {} but the column is {}",
                        right.field(c).name,
                        v.domain(),
                        right.field(c).domain
                    )));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn right_value_columns(&self, right: &Schema) -> Vec<usize> {
        (0..right.width())
            .filter(|c| !self.right_keys.contains(c))
            .collect()
    }
}

/// Left columns followed by the right non-key columns; clashing right names
/// get a `_r` suffix.
pub fn join_output_schema(left: &Schema, right: &Schema, spec: &JoinSpec) -> Result<Schema> {
    let mut fields: Vec<Field> = left.fields().to_vec();
    for c in spec.right_value_columns(right) {
        let mut f = right.field(c).clone();
        while fields.iter().any(|g| g.name == f.name) {
            f.name.push_str("_r");
        }
        fields.push(f);
    }
    Schema::new(fields)
}

/// Hash join building on `right`. Output rows follow left row order, then
/// right row order among matches.
pub fn local_join(left: &Table, right: &Table, spec: &JoinSpec) -> Result<Table> {
    spec.validate(left.schema(), right.schema())?;
    let schema = Arc::new(join_output_schema(left.schema(), right.schema(), spec)?);

    let rhash = hash_rows(right, &spec.right_keys)?;
    let mut heads = HashIndex::default();
    let mut next = vec![NIL; right.len()];
    // insert in reverse so each chain lists right rows in ascending order
    for r in (0..right.len()).rev() {
        let slot = heads.entry(rhash[r]).or_insert(NIL);
        next[r] = *slot;
        *slot = r as u32;
    }

    let lhash = hash_rows(left, &spec.left_keys)?;
    let mut left_idx = Vec::new();
    let mut right_idx: Vec<u32> = Vec::new();
    let keep_unmatched = matches!(spec.kind, JoinKind::Left { .. });
    for (l, h) in lhash.iter().enumerate() {
        let mut r = heads.get(h).copied().unwrap_or(NIL);
        let mut matched = false;
        while r != NIL {
            if rows_equal(left, l, &spec.left_keys, right, r as usize, &spec.right_keys) {
                left_idx.push(l);
                right_idx.push(r);
                matched = true;
            }
            r = next[r as usize];
        }
        if !matched && keep_unmatched {
            left_idx.push(l);
            right_idx.push(NIL);
        }
    }

    let mut columns: Vec<Column> = left
        .columns()
        .map(|c| c.take(&left_idx))
        .collect::<Result<_>>()?;
    let fill = match &spec.kind {
        JoinKind::Left { fill } => fill.as_slice(),
        JoinKind::Inner => &[],
    };
    for (i, c) in spec.right_value_columns(right.schema()).into_iter().enumerate() {
        columns.push(take_with_fill(right.column(c), &right_idx, fill.get(i))?);
    }
    Table::from_columns(schema, columns)
}

fn take_with_fill(col: &Column, idx: &[u32], fill: Option<&Value>) -> Result<Column> {
    macro_rules! gather {
        ($v:expr, $variant:ident, $fill:pat => $fv:expr) => {{
            let fv = match fill {
                Some($fill) => Some($fv),
                _ => None,
            };
            Column::$variant(
                idx.iter()
                    .map(|&r| {
                        if r == NIL {
                            fv.clone().expect("fill validated")
                        } else {
                            $v[r as usize].clone()
                        }
                    })
                    .collect(),
            )
        }};
    }
    Ok(match col {
        Column::Int64(v) => gather!(v, Int64, Value::Int64(x) => *x),
        Column::Float64(v) => gather!(v, Float64, Value::Float64(x) => *x),
        Column::Utf8(v) => gather!(v, Utf8, Value::Utf8(x) => x.clone()),
    })
}
