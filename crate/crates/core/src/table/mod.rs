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

//! Columnar in-memory tables.
//!
//! A [`Table`] is one partition of a dataframe: a [`Schema`] plus equal-length
//! typed [`Column`]s. Row labels are implicit (partition-local index plus the
//! partition's global offset) and are not stored.

mod kernels;
pub mod wire;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use kernels::{
    compare_f64, compare_rows, hash_rows, row_compare, row_hash, rows_equal, Direction, RowKey,
    SortKey,
};
pub(crate) use kernels::rehash;

/// Supported data types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Int64,
    Float64,
    Utf8,
}

impl Domain {
    pub fn is_numeric(self) -> bool {
        matches!(self, Domain::Int64 | Domain::Float64)
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Domain::Int64 => 0,
            Domain::Float64 => 1,
            Domain::Utf8 => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Domain> {
        match tag {
            0 => Some(Domain::Int64),
            1 => Some(Domain::Float64),
            2 => Some(Domain::Utf8),
            _ => None,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Domain::Int64 => "int64",
            Domain::Float64 => "float64",
            Domain::Utf8 => "utf8",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Field {
    pub name: String,
    pub domain: Domain,
}

impl Field {
    pub fn new(name: impl Into<String>, domain: Domain) -> Self {
        Field {
            name: name.into(),
            domain,
        }
    }
}

/// Ordered column names and domains. Names are unique.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schema {
    fields: Vec<Field>,
}

impl Schema {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        for (i, f) in fields.iter().enumerate() {
            if fields[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate column name `{}`",
                    f.name
                )));
            }
        }
        Ok(Schema { fields })
    }

    /// Builds a schema from `(name, domain)` pairs.
    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, Domain)>) -> Result<Self> {
        Schema::new(
            pairs
                .into_iter()
                .map(|(n, d)| Field::new(n, d))
                .collect(),
        )
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn width(&self) -> usize {
        self.fields.len()
    }

    pub fn field(&self, i: usize) -> &Field {
        &self.fields[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.fields
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn domains(&self) -> impl Iterator<Item = Domain> + '_ {
        self.fields.iter().map(|f| f.domain)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, field) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}:{}", field.name, field.domain)?;
        }
        f.write_str("]")
    }
}

/// Owned scalar value.
#[derive(Debug, Clone)]
pub enum Value {
    Int64(i64),
    Float64(f64),
    Utf8(String),
}

impl Value {
    pub fn domain(&self) -> Domain {
        match self {
            Value::Int64(_) => Domain::Int64,
            Value::Float64(_) => Domain::Float64,
            Value::Utf8(_) => Domain::Utf8,
        }
    }

    pub fn as_ref(&self) -> ValueRef<'_> {
        match self {
            Value::Int64(v) => ValueRef::Int64(*v),
            Value::Float64(v) => ValueRef::Float64(*v),
            Value::Utf8(v) => ValueRef::Utf8(v),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        self.as_ref().as_f64()
    }
}

/// Values compare with the same total order the row kernels use.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.as_ref() == other.as_ref()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.as_ref().fmt(f)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int64(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float64(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Utf8(v.to_string())
    }
}

/// Borrowed view of a single cell.
#[derive(Debug, Clone, Copy)]
pub enum ValueRef<'a> {
    Int64(i64),
    Float64(f64),
    Utf8(&'a str),
}

impl ValueRef<'_> {
    pub fn domain(&self) -> Domain {
        match self {
            ValueRef::Int64(_) => Domain::Int64,
            ValueRef::Float64(_) => Domain::Float64,
            ValueRef::Utf8(_) => Domain::Utf8,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ValueRef::Int64(v) => Some(v as f64),
            ValueRef::Float64(v) => Some(v),
            ValueRef::Utf8(_) => None,
        }
    }

    pub fn to_owned(&self) -> Value {
        match *self {
            ValueRef::Int64(v) => Value::Int64(v),
            ValueRef::Float64(v) => Value::Float64(v),
            ValueRef::Utf8(v) => Value::Utf8(v.to_string()),
        }
    }
}

impl PartialEq for ValueRef<'_> {
    fn eq(&self, other: &Self) -> bool {
        match (*self, *other) {
            (ValueRef::Int64(a), ValueRef::Int64(b)) => a == b,
            (ValueRef::Float64(a), ValueRef::Float64(b)) => compare_f64(a, b).is_eq(),
            (ValueRef::Utf8(a), ValueRef::Utf8(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for ValueRef<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueRef::Int64(v) => write!(f, "{v}"),
            ValueRef::Float64(v) => write!(f, "{v}"),
            ValueRef::Utf8(v) => write!(f, "{v:?}"),
        }
    }
}

/// A typed, null-free column.
#[derive(Debug, Clone)]
pub enum Column {
    Int64(Vec<i64>),
    Float64(Vec<f64>),
    Utf8(Vec<String>),
}

impl Column {
    pub fn empty(domain: Domain) -> Column {
        Column::with_capacity(domain, 0)
    }

    pub fn with_capacity(domain: Domain, cap: usize) -> Column {
        match domain {
            Domain::Int64 => Column::Int64(Vec::with_capacity(cap)),
            Domain::Float64 => Column::Float64(Vec::with_capacity(cap)),
            Domain::Utf8 => Column::Utf8(Vec::with_capacity(cap)),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            Column::Int64(_) => Domain::Int64,
            Column::Float64(_) => Domain::Float64,
            Column::Utf8(_) => Domain::Utf8,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Column::Int64(v) => v.len(),
            Column::Float64(v) => v.len(),
            Column::Utf8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, row: usize) -> ValueRef<'_> {
        match self {
            Column::Int64(v) => ValueRef::Int64(v[row]),
            Column::Float64(v) => ValueRef::Float64(v[row]),
            Column::Utf8(v) => ValueRef::Utf8(&v[row]),
        }
    }

    /// Appends a value; the value must belong to this column's domain.
    pub fn push(&mut self, value: ValueRef<'_>) -> Result<()> {
        match (self, value) {
            (Column::Int64(c), ValueRef::Int64(v)) => c.push(v),
            (Column::Float64(c), ValueRef::Float64(v)) => c.push(v),
            (Column::Utf8(c), ValueRef::Utf8(v)) => c.push(v.to_string()),
            (c, v) => {
                return Err(Error::DomainMismatch(format!(
                    "cannot push {} value into {} column",
                    v.domain(),
                    c.domain()
                )))
            }
        }
        Ok(())
    }

    pub fn take(&self, indices: &[usize]) -> Result<Column> {
        let len = self.len();
        if let Some(&bad) = indices.iter().find(|&&i| i >= len) {
            return Err(Error::IndexOutOfBounds { index: bad, len });
        }
        Ok(match self {
            Column::Int64(v) => Column::Int64(indices.iter().map(|&i| v[i]).collect()),
            Column::Float64(v) => Column::Float64(indices.iter().map(|&i| v[i]).collect()),
            Column::Utf8(v) => Column::Utf8(indices.iter().map(|&i| v[i].clone()).collect()),
        })
    }

    pub fn slice(&self, start: usize, end: usize) -> Column {
        match self {
            Column::Int64(v) => Column::Int64(v[start..end].to_vec()),
            Column::Float64(v) => Column::Float64(v[start..end].to_vec()),
            Column::Utf8(v) => Column::Utf8(v[start..end].to_vec()),
        }
    }

    /// Appends all of `other`, which must share this column's domain.
    pub fn extend_from(&mut self, other: &Column) -> Result<()> {
        match (self, other) {
            (Column::Int64(a), Column::Int64(b)) => a.extend_from_slice(b),
            (Column::Float64(a), Column::Float64(b)) => a.extend_from_slice(b),
            (Column::Utf8(a), Column::Utf8(b)) => a.extend_from_slice(b),
            (a, b) => {
                return Err(Error::DomainMismatch(format!(
                    "cannot append {} column to {} column",
                    b.domain(),
                    a.domain()
                )))
            }
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = ValueRef<'_>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }
}

impl PartialEq for Column {
    fn eq(&self, other: &Self) -> bool {
        if self.domain() != other.domain() || self.len() != other.len() {
            return false;
        }
        match (self, other) {
            (Column::Int64(a), Column::Int64(b)) => a == b,
            (Column::Float64(a), Column::Float64(b)) => {
                a.iter().zip(b).all(|(x, y)| compare_f64(*x, *y).is_eq())
            }
            (Column::Utf8(a), Column::Utf8(b)) => a == b,
            _ => false,
        }
    }
}

impl From<Vec<i64>> for Column {
    fn from(v: Vec<i64>) -> Self {
        Column::Int64(v)
    }
}

impl From<Vec<f64>> for Column {
    fn from(v: Vec<f64>) -> Self {
        Column::Float64(v)
    }
}

impl From<Vec<String>> for Column {
    fn from(v: Vec<String>) -> Self {
        Column::Utf8(v)
    }
}

impl From<Vec<&str>> for Column {
    fn from(v: Vec<&str>) -> Self {
        Column::Utf8(v.into_iter().map(str::to_string).collect())
    }
}

/// One in-memory partition. Immutable once built; columns are shared on clone.
#[derive(Debug, Clone)]
pub struct Table {
    schema: Arc<Schema>,
    columns: Vec<Arc<Column>>,
    len: usize,
}

impl Table {
    /// Builds a table, checking arity, domains and lengths against `schema`.
    pub fn from_columns(schema: impl Into<Arc<Schema>>, columns: Vec<Column>) -> Result<Table> {
        Table::from_shared(schema.into(), columns.into_iter().map(Arc::new).collect())
    }

    pub(crate) fn from_shared(schema: Arc<Schema>, columns: Vec<Arc<Column>>) -> Result<Table> {
        if columns.len() != schema.width() {
            return Err(Error::SchemaMismatch(format!(
                "schema {} has {} columns but {} were supplied",
                schema,
                schema.width(),
                columns.len()
            )));
        }
        for (field, col) in schema.fields().iter().zip(&columns) {
            if field.domain != col.domain() {
                return Err(Error::SchemaMismatch(format!(
                    "column `{}` declared {} but holds {}",
                    field.name,
                    field.domain,
                    col.domain()
                )));
            }
        }
        let len = columns.first().map_or(0, |c| c.len());
        if let Some((field, col)) = schema
            .fields()
            .iter()
            .zip(&columns)
            .find(|(_, c)| c.len() != len)
        {
            return Err(Error::LengthMismatch(format!(
                "column `{}` has {} rows, expected {}",
                field.name,
                col.len(),
                len
            )));
        }
        Ok(Table {
            schema,
            columns,
            len,
        })
    }

    /// A zero-row table with the given schema.
    pub fn empty(schema: impl Into<Arc<Schema>>) -> Table {
        let schema = schema.into();
        let columns = schema
            .domains()
            .map(|d| Arc::new(Column::empty(d)))
            .collect();
        Table {
            schema,
            columns,
            len: 0,
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_ref(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, i: usize) -> &Column {
        &self.columns[i]
    }

    pub(crate) fn column_arc(&self, i: usize) -> &Arc<Column> {
        &self.columns[i]
    }

    pub fn column_by_name(&self, name: &str) -> Result<&Column> {
        Ok(&self.columns[self.schema.index_of(name)?])
    }

    pub fn columns(&self) -> impl Iterator<Item = &Column> + '_ {
        self.columns.iter().map(|c| c.as_ref())
    }

    pub fn value(&self, col: usize, row: usize) -> ValueRef<'_> {
        self.columns[col].get(row)
    }

    /// Owned copy of one row.
    pub fn row(&self, row: usize) -> Vec<Value> {
        self.columns.iter().map(|c| c.get(row).to_owned()).collect()
    }

    /// Gathers rows in the order given by `indices`.
    pub fn take_rows(&self, indices: &[usize]) -> Result<Table> {
        let columns = self
            .columns
            .iter()
            .map(|c| c.take(indices).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        if self.columns.is_empty() {
            if let Some(&bad) = indices.iter().find(|&&i| i >= self.len) {
                return Err(Error::IndexOutOfBounds {
                    index: bad,
                    len: self.len,
                });
            }
        }
        Ok(Table {
            schema: self.schema.clone(),
            columns,
            len: indices.len(),
        })
    }

    /// Contiguous half-open row range `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Table> {
        if start > end {
            return Err(Error::IndexOutOfBounds {
                index: start,
                len: end,
            });
        }
        if end > self.len {
            return Err(Error::IndexOutOfBounds {
                index: end,
                len: self.len,
            });
        }
        if start == 0 && end == self.len {
            return Ok(self.clone());
        }
        Ok(Table {
            schema: self.schema.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| Arc::new(c.slice(start, end)))
                .collect(),
            len: end - start,
        })
    }

    /// Keeps the named columns, in the given order.
    pub fn project(&self, names: &[&str]) -> Result<Table> {
        let idx = names
            .iter()
            .map(|n| self.schema.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        self.project_indices(&idx)
    }

    pub fn project_indices(&self, indices: &[usize]) -> Result<Table> {
        let width = self.width();
        if let Some(&bad) = indices.iter().find(|&&i| i >= width) {
            return Err(Error::IndexOutOfBounds {
                index: bad,
                len: width,
            });
        }
        let schema = Schema::new(
            indices
                .iter()
                .map(|&i| self.schema.field(i).clone())
                .collect(),
        )?;
        Ok(Table {
            schema: Arc::new(schema),
            columns: indices.iter().map(|&i| self.columns[i].clone()).collect(),
            len: self.len,
        })
    }

    /// Appends a column at the end of the table.
    pub fn with_column(&self, name: &str, column: Column) -> Result<Table> {
        if column.len() != self.len {
            return Err(Error::LengthMismatch(format!(
                "new column `{name}` has {} rows, table has {}",
                column.len(),
                self.len
            )));
        }
        let mut fields = self.schema.fields().to_vec();
        fields.push(Field::new(name, column.domain()));
        let mut columns = self.columns.clone();
        columns.push(Arc::new(column));
        Table::from_shared(Arc::new(Schema::new(fields)?), columns)
    }

    /// Replaces column `i`, keeping its name. The domain may change.
    pub fn replace_column(&self, i: usize, column: Column) -> Result<Table> {
        if i >= self.width() {
            return Err(Error::IndexOutOfBounds {
                index: i,
                len: self.width(),
            });
        }
        let mut fields = self.schema.fields().to_vec();
        fields[i].domain = column.domain();
        let mut columns = self.columns.clone();
        columns[i] = Arc::new(column);
        Table::from_shared(Arc::new(Schema::new(fields)?), columns)
    }

    /// Canonical sort: ascending by every column, left to right.
    pub fn sort_canonical(&self) -> Table {
        let keys: Vec<usize> = (0..self.width()).collect();
        let mut order: Vec<usize> = (0..self.len).collect();
        order.sort_by(|&a, &b| compare_rows(self, a, &keys, self, b, &keys, None));
        self.take_rows(&order).expect("indices in range")
    }
}

/// Schema and values equality; row labels are implicit and not compared.
impl PartialEq for Table {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.len == other.len && self.columns == other.columns
    }
}

/// Builds a table from a schema and columns (free-function form of
/// [`Table::from_columns`]).
pub fn table_from_columns(schema: Schema, columns: Vec<Column>) -> Result<Table> {
    Table::from_columns(schema, columns)
}

/// Concatenates tables in argument order. `schema` is used when the list is
/// empty and checked against every input otherwise.
pub fn concat_tables(schema: &Arc<Schema>, tables: &[Table]) -> Result<Table> {
    for t in tables {
        if t.schema() != schema.as_ref() {
            return Err(Error::SchemaMismatch(format!(
                "cannot concatenate {} with {}",
                t.schema(),
                schema
            )));
        }
    }
    match tables.len() {
        0 => return Ok(Table::empty(schema.clone())),
        1 => return Ok(tables[0].clone()),
        _ => {}
    }
    let total: usize = tables.iter().map(Table::len).sum();
    let mut columns = Vec::with_capacity(schema.width());
    for (i, field) in schema.fields().iter().enumerate() {
        let mut col = Column::with_capacity(field.domain, total);
        for t in tables {
            col.extend_from(t.column(i))?;
        }
        columns.push(Arc::new(col));
    }
    Ok(Table {
        schema: schema.clone(),
        columns,
        len: total,
    })
}

/// Gathers `(input, row)` pairs from several same-schema tables into one table.
pub(crate) fn gather_pairs(
    schema: &Arc<Schema>,
    tables: &[Table],
    pairs: &[(usize, usize)],
) -> Table {
    let mut columns = Vec::with_capacity(schema.width());
    for (c, field) in schema.fields().iter().enumerate() {
        let col = match field.domain {
            Domain::Int64 => {
                let srcs: Vec<&[i64]> = tables
                    .iter()
                    .map(|t| match t.column(c) {
                        Column::Int64(v) => v.as_slice(),
                        _ => unreachable!("schema checked"),
                    })
                    .collect();
                Column::Int64(pairs.iter().map(|&(t, r)| srcs[t][r]).collect())
            }
            Domain::Float64 => {
                let srcs: Vec<&[f64]> = tables
                    .iter()
                    .map(|t| match t.column(c) {
                        Column::Float64(v) => v.as_slice(),
                        _ => unreachable!("schema checked"),
                    })
                    .collect();
                Column::Float64(pairs.iter().map(|&(t, r)| srcs[t][r]).collect())
            }
            Domain::Utf8 => {
                let srcs: Vec<&[String]> = tables
                    .iter()
                    .map(|t| match t.column(c) {
                        Column::Utf8(v) => v.as_slice(),
                        _ => unreachable!("schema checked"),
                    })
                    .collect();
                Column::Utf8(pairs.iter().map(|&(t, r)| srcs[t][r].clone()).collect())
            }
        };
        columns.push(Arc::new(col));
    }
    Table {
        schema: schema.clone(),
        columns,
        len: pairs.len(),
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({} rows)", self.schema, self.len)?;
        for r in 0..self.len.min(20) {
            let cells: Vec<String> = self.columns.iter().map(|c| c.get(r).to_string()).collect();
            writeln!(f, "  {}", cells.join(", "))?;
        }
        if self.len > 20 {
            writeln!(f, "  ...")?;
        }
        Ok(())
    }
}
