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

//! Table wire format.
//!
//! All integers are little-endian.
//!
//! ```text
//! magic      4 bytes   "BSPT"
//! version    u32       1
//! ncols      u32
//! ncols x { name_len u32, name (UTF-8), domain u8 }   0=int64 1=float64 2=utf8
//! nrows      u64
//! ncols x payload:
//!   int64    nrows x i64
//!   float64  nrows x f64 (IEEE-754 bits)
//!   utf8     (nrows + 1) x u64 offsets, offsets[0] = 0, non-decreasing,
//!            followed by offsets[nrows] bytes of UTF-8 data
//! ```

use std::sync::Arc;

use super::{Column, Domain, Field, Schema, Table};
use crate::error::{Error, Result};

pub const TABLE_MAGIC: [u8; 4] = *b"BSPT";
pub const TABLE_VERSION: u32 = 1;

/// Encodes a table into the wire format.
pub fn serialize_table(table: &Table) -> Vec<u8> {
    let mut out = Vec::with_capacity(serialized_len_hint(table));
    out.extend_from_slice(&TABLE_MAGIC);
    out.extend_from_slice(&TABLE_VERSION.to_le_bytes());
    out.extend_from_slice(&(table.width() as u32).to_le_bytes());
    for f in table.schema().fields() {
        out.extend_from_slice(&(f.name.len() as u32).to_le_bytes());
        out.extend_from_slice(f.name.as_bytes());
        out.push(f.domain.tag());
    }
    out.extend_from_slice(&(table.len() as u64).to_le_bytes());
    for col in table.columns() {
        match col {
            Column::Int64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Column::Float64(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_bits().to_le_bytes())),
            Column::Utf8(v) => {
                let mut off = 0u64;
                out.extend_from_slice(&off.to_le_bytes());
                for s in v {
                    off += s.len() as u64;
                    out.extend_from_slice(&off.to_le_bytes());
                }
                for s in v {
                    out.extend_from_slice(s.as_bytes());
                }
            }
        }
    }
    out
}

fn serialized_len_hint(table: &Table) -> usize {
    let header: usize = 16 + table.schema().fields().iter().map(|f| 5 + f.name.len()).sum::<usize>();
    let body: usize = table
        .columns()
        .map(|c| match c {
            Column::Int64(v) => v.len() * 8,
            Column::Float64(v) => v.len() * 8,
            Column::Utf8(v) => (v.len() + 1) * 8 + v.iter().map(String::len).sum::<usize>(),
        })
        .sum();
    header + body
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::CorruptPayload(format!(
                    "truncated: need {n} bytes at offset {}, have {}",
                    self.pos,
                    self.buf.len() - self.pos
                ))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

/// Decodes bytes produced by [`serialize_table`].
pub fn deserialize_table(bytes: &[u8]) -> Result<Table> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    if cur.take(4)? != TABLE_MAGIC {
        return Err(Error::CorruptPayload("bad table magic".into()));
    }
    let version = cur.u32()?;
    if version != TABLE_VERSION {
        return Err(Error::CorruptPayload(format!(
            "unsupported table version {version}"
        )));
    }
    let ncols = cur.u32()? as usize;
    // each column header needs at least 5 bytes
    if ncols > cur.remaining() / 5 {
        return Err(Error::CorruptPayload(format!("implausible column count {ncols}")));
    }
    let mut fields = Vec::with_capacity(ncols);
    for _ in 0..ncols {
        let name_len = cur.u32()? as usize;
        let name = std::str::from_utf8(cur.take(name_len)?)
            .map_err(|e| Error::CorruptPayload(format!("column name: {e}")))?
            .to_string();
        let tag = cur.u8()?;
        let domain = Domain::from_tag(tag)
            .ok_or_else(|| Error::CorruptPayload(format!("unknown domain tag {tag}")))?;
        fields.push(Field::new(name, domain));
    }
    let schema = Schema::new(fields).map_err(|e| Error::CorruptPayload(e.to_string()))?;
    let nrows = usize::try_from(cur.u64()?)
        .map_err(|_| Error::CorruptPayload("row count overflows usize".into()))?;
    let mut columns = Vec::with_capacity(ncols);
    for field in schema.fields() {
        let col = match field.domain {
            Domain::Int64 => {
                let raw = cur.take(fixed_width_len(nrows)?)?;
                Column::Int64(
                    raw.chunks_exact(8)
                        .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                )
            }
            Domain::Float64 => {
                let raw = cur.take(fixed_width_len(nrows)?)?;
                Column::Float64(
                    raw.chunks_exact(8)
                        .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap())))
                        .collect(),
                )
            }
            Domain::Utf8 => {
                let raw = cur.take(fixed_width_len(nrows.checked_add(1).ok_or_else(|| {
                    Error::CorruptPayload("row count overflow".into())
                })?)?)?;
                let offsets: Vec<u64> = raw
                    .chunks_exact(8)
                    .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::CorruptPayload(format!(
                        "utf8 column `{}` has inconsistent offsets",
                        field.name
                    )));
                }
                let data_len = usize::try_from(offsets[nrows])
                    .map_err(|_| Error::CorruptPayload("utf8 data length overflow".into()))?;
                let data = cur.take(data_len)?;
                let text = std::str::from_utf8(data)
                    .map_err(|e| Error::CorruptPayload(format!("utf8 column `{}`: {e}", field.name)))?;
                let mut values = Vec::with_capacity(nrows);
                for w in offsets.windows(2) {
                    let (s, e) = (w[0] as usize, w[1] as usize);
                    let v = text.get(s..e).ok_or_else(|| {
                        Error::CorruptPayload(format!(
                            "utf8 column `{}`: offset splits a character",
                            field.name
                        ))
                    })?;
                    values.push(v.to_string());
                }
                Column::Utf8(values)
            }
        };
        columns.push(col);
    }
    if cur.remaining() != 0 {
        return Err(Error::CorruptPayload(format!(
            "{} trailing bytes after table payload",
            cur.remaining()
        )));
    }
    if ncols == 0 && nrows != 0 {
        return Err(Error::CorruptPayload("rows without columns".into()));
    }
    Table::from_columns(Arc::new(schema), columns)
}

fn fixed_width_len(n: usize) -> Result<usize> {
    n.checked_mul(8)
        .ok_or_else(|| Error::CorruptPayload("row count overflow".into()))
}
