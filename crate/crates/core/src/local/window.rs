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

//! Fixed-length rolling windows.

use super::aggregate::{AggPartial, AggSpec};
use crate::error::{Error, Result};
use crate::table::{Column, Field, Schema, Table};

pub(crate) fn rolling_schema(schema: &Schema, agg: &AggSpec) -> Result<Schema> {
    if agg.column >= schema.width() {
        return Err(Error::IndexOutOfBounds { index: agg.column, len: schema.width() });
    }
    let input = schema.field(agg.column).domain;
    if !input.is_numeric() {
        return Err(Error::DomainMismatch(format!("rolling {} over {input} column", agg.func)));
    }
    let domain = agg.func.output_domain(input)?;
    Schema::new(vec![Field::new(format!("rolling_{}", agg.output_name(schema)), domain)])
}

/// Aggregates every complete window of `window` consecutive rows. Output
/// row `j` covers input rows `j..j + window`; there are
/// `max(len - window + 1, 0)` of them. Each window is evaluated on its own,
/// so the result does not depend on where the input was split.
pub fn local_rolling(table: &Table, window: usize, agg: &AggSpec) -> Result<Table> {
    if window < 1 {
        return Err(Error::InvalidWindow(window));
    }
    let schema = rolling_schema(table.schema(), agg)?;
    let col = table.column(agg.column);
    let n = (table.len() + 1).saturating_sub(window);
    let mut out = Column::with_capacity(schema.field(0).domain, n);
    for start in 0..n {
        let p = AggPartial::over(agg.func, col, start..start + window)?;
        out.push(p.finish()?.as_ref())?;
    }
    Table::from_columns(schema, vec![out])
}
