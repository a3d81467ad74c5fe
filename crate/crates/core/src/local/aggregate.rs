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

//! Column aggregation and group-by.
//!
//! Group-by runs as combine then finalize. The combine step reduces each
//! group to intermediate state columns; because every state column merges
//! with an associative operation (add, min or max), state tables from
//! different partitions can be concatenated and merged again before
//! finalizing. State layout per aggregate, after the leading key columns:
//!
//! | aggregate | state columns                        |
//! |-----------|--------------------------------------|
//! | sum       | sum (input domain)                   |
//! | count     | count (int64)                        |
//! | min / max | running value (input domain)         |
//! | mean      | sum_x (float64), count_x (int64)     |
//! | std       | sum_x2, sum_x (float64), count_x (int64) |
//!
//! Std is the population standard deviation
//! `sqrt(max(sum_x2/n - (sum_x/n)^2, 0))`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use super::Grouping;
use crate::error::{Error, Result};
use crate::table::{compare_f64, Column, Domain, Field, Schema, Table, Value, ValueRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFn {
    Sum,
    Count,
    Mean,
    Min,
    Max,
    Std,
}

impl AggFn {
    pub const ALL: [AggFn; 6] = [
        AggFn::Sum,
        AggFn::Count,
        AggFn::Mean,
        AggFn::Min,
        AggFn::Max,
        AggFn::Std,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggFn::Sum => "sum",
            AggFn::Count => "count",
            AggFn::Mean => "mean",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::Std => "std",
        }
    }

    /// Result domain for an input column of `input`.
    pub fn output_domain(self, input: Domain) -> Result<Domain> {
        match (self, input) {
            (AggFn::Count, _) => Ok(Domain::Int64),
            (AggFn::Min | AggFn::Max, d) => Ok(d),
            (AggFn::Sum, d) if d.is_numeric() => Ok(d),
            (AggFn::Mean | AggFn::Std, d) if d.is_numeric() => Ok(Domain::Float64),
            (f, d) => Err(Error::DomainMismatch(format!("{} over {d} column", f.name()))),
        }
    }
}

impl fmt::Display for AggFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An aggregate function applied to one value column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AggSpec {
    pub func: AggFn,
    pub column: usize,
}

impl AggSpec {
    pub fn new(func: AggFn, column: usize) -> AggSpec {
        AggSpec { func, column }
    }

    fn input<'t>(&self, table: &'t Table) -> Result<(&'t Field, &'t Column)> {
        if self.column >= table.width() {
            return Err(Error::IndexOutOfBounds {
                index: self.column,
                len: table.width(),
            });
        }
        Ok((table.schema().field(self.column), table.column(self.column)))
    }

    pub fn output_name(&self, schema: &Schema) -> String {
        format!("{}_{}", self.func, schema.field(self.column).name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MergeOp {
    Add,
    Min,
    Max,
}

struct StatePart {
    suffix: &'static str,
    domain: Domain,
    op: MergeOp,
}

fn state_parts(func: AggFn, input: Domain) -> Result<Vec<StatePart>> {
    func.output_domain(input)?;
    let p = |suffix, domain, op| StatePart { suffix, domain, op };
    Ok(match func {
        AggFn::Sum => vec![p("", input, MergeOp::Add)],
        AggFn::Count => vec![p("", Domain::Int64, MergeOp::Add)],
        AggFn::Min => vec![p("", input, MergeOp::Min)],
        AggFn::Max => vec![p("", input, MergeOp::Max)],
        AggFn::Mean => vec![
            p("__sum_x", Domain::Float64, MergeOp::Add),
            p("__count_x", Domain::Int64, MergeOp::Add),
        ],
        AggFn::Std => vec![
            p("__sum_x2", Domain::Float64, MergeOp::Add),
            p("__sum_x", Domain::Float64, MergeOp::Add),
            p("__count_x", Domain::Int64, MergeOp::Add),
        ],
    })
}

fn as_f64_vec(col: &Column) -> Vec<f64> {
    match col {
        Column::Int64(v) => v.iter().map(|&x| x as f64).collect(),
        Column::Float64(v) => v.clone(),
        Column::Utf8(_) => unreachable!("domain checked"),
    }
}

/// Per-row state columns, before any grouping.
fn unit_states(func: AggFn, col: &Column) -> Vec<Column> {
    let n = col.len();
    match func {
        AggFn::Sum | AggFn::Min | AggFn::Max => vec![col.clone()],
        AggFn::Count => vec![Column::Int64(vec![1; n])],
        AggFn::Mean => vec![Column::Float64(as_f64_vec(col)), Column::Int64(vec![1; n])],
        AggFn::Std => {
            let x = as_f64_vec(col);
            let x2 = x.iter().map(|v| v * v).collect();
            vec![Column::Float64(x2), Column::Float64(x), Column::Int64(vec![1; n])]
        }
    }
}

fn pick(ord: Ordering, op: MergeOp) -> bool {
    match op {
        MergeOp::Min => ord == Ordering::Less,
        MergeOp::Max => ord == Ordering::Greater,
        MergeOp::Add => unreachable!(),
    }
}

/// Folds `col` per group in row order.
fn reduce_column(col: &Column, g: &Grouping, op: MergeOp) -> Column {
    let groups = &g.group_of_row;
    match (col, op) {
        (Column::Int64(v), MergeOp::Add) => {
            let mut acc = vec![0i64; g.len()];
            for (x, &gid) in v.iter().zip(groups) {
                acc[gid as usize] = acc[gid as usize].wrapping_add(*x);
            }
            Column::Int64(acc)
        }
        (Column::Float64(v), MergeOp::Add) => {
            let mut acc = vec![0f64; g.len()];
            for (x, &gid) in v.iter().zip(groups) {
                acc[gid as usize] += *x;
            }
            Column::Float64(acc)
        }
        (Column::Utf8(_), MergeOp::Add) => unreachable!("domain checked"),
        (Column::Int64(v), op) => {
            let mut acc: Vec<i64> = g.first_rows.iter().map(|&r| v[r]).collect();
            for (x, &gid) in v.iter().zip(groups) {
                if pick(x.cmp(&acc[gid as usize]), op) {
                    acc[gid as usize] = *x;
                }
            }
            Column::Int64(acc)
        }
        (Column::Float64(v), op) => {
            let mut acc: Vec<f64> = g.first_rows.iter().map(|&r| v[r]).collect();
            for (x, &gid) in v.iter().zip(groups) {
                if pick(compare_f64(*x, acc[gid as usize]), op) {
                    acc[gid as usize] = *x;
                }
            }
            Column::Float64(acc)
        }
        (Column::Utf8(v), op) => {
            let mut acc: Vec<usize> = g.first_rows.clone();
            for (r, &gid) in groups.iter().enumerate() {
                if pick(v[r].cmp(&v[acc[gid as usize]]), op) {
                    acc[gid as usize] = r;
                }
            }
            Column::Utf8(acc.into_iter().map(|r| v[r].clone()).collect())
        }
    }
}

fn check_keys(table: &Table, key_cols: &[usize]) -> Result<()> {
    if key_cols.is_empty() {
        return Err(Error::Usage("group-by needs at least one key column".into()));
    }
    if let Some(&bad) = key_cols.iter().find(|&&c| c >= table.width()) {
        return Err(Error::IndexOutOfBounds {
            index: bad,
            len: table.width(),
        });
    }
    Ok(())
}

/// Local combine: key columns (in `key_cols` order) followed by the state
/// columns of every aggregate, one row per distinct key.
pub fn groupby_combine(table: &Table, key_cols: &[usize], aggs: &[AggSpec]) -> Result<Table> {
    check_keys(table, key_cols)?;
    let mut fields: Vec<Field> = key_cols
        .iter()
        .map(|&c| table.schema().field(c).clone())
        .collect();
    let mut units = Vec::new();
    let mut ops = Vec::new();
    for agg in aggs {
        let (field, col) = agg.input(table)?;
        let base = agg.output_name(table.schema());
        for (part, unit) in state_parts(agg.func, field.domain)?
            .into_iter()
            .zip(unit_states(agg.func, col))
        {
            fields.push(Field::new(format!("{base}{}", part.suffix), part.domain));
            units.push(unit);
            ops.push(part.op);
        }
    }
    let g = Grouping::build(table, key_cols)?;
    let mut columns: Vec<Column> = key_cols
        .iter()
        .map(|&c| table.column(c).take(&g.first_rows))
        .collect::<Result<_>>()?;
    for (unit, op) in units.iter().zip(ops) {
        columns.push(reduce_column(unit, &g, op));
    }
    Table::from_columns(Schema::new(fields)?, columns)
}

/// Merges state rows with equal keys (the first `key_count` columns) and
/// computes final aggregate values.
pub fn groupby_finalize(state: &Table, key_count: usize, aggs: &[AggSpec]) -> Result<Table> {
    finalize_states(state, key_count, aggs, true)
}

/// Equivalent to `groupby_finalize(groupby_combine(table, ..))`; output is
/// one row per distinct key in order of first occurrence.
pub fn local_groupby(table: &Table, key_cols: &[usize], aggs: &[AggSpec]) -> Result<Table> {
    let state = groupby_combine(table, key_cols, aggs)?;
    finalize_states(&state, key_cols.len(), aggs, false)
}

fn finalize_states(state: &Table, key_count: usize, aggs: &[AggSpec], merge: bool) -> Result<Table> {
    let keys: Vec<usize> = (0..key_count).collect();
    check_keys(state, &keys)?;
    let schema = state.schema();
    // (first state column, parts) per aggregate
    let mut layout = Vec::with_capacity(aggs.len());
    let mut next = key_count;
    for agg in aggs {
        let first = schema.fields().get(next).ok_or_else(|| {
            Error::SchemaMismatch(format!("state table {schema} is missing columns for {}", agg.func))
        })?;
        let parts = state_parts(agg.func, first.domain)?;
        if next + parts.len() > schema.width() {
            return Err(Error::SchemaMismatch(format!(
                "state table {schema} is missing columns for {}",
                agg.func
            )));
        }
        for (i, p) in parts.iter().enumerate() {
            if schema.field(next + i).domain != p.domain {
                return Err(Error::SchemaMismatch(format!(
                    "state column `{}` should be {}",
                    schema.field(next + i).name,
                    p.domain
                )));
            }
        }
        layout.push((next, parts));
        next += layout.last().unwrap().1.len();
    }
    if next != schema.width() {
        return Err(Error::SchemaMismatch(format!(
            "state table {schema} has {} extra columns",
            schema.width() - next
        )));
    }

    let merged;
    let state = if merge {
        let g = Grouping::build(state, &keys)?;
        let mut columns: Vec<Arc<Column>> = keys
            .iter()
            .map(|&c| state.column(c).take(&g.first_rows).map(Arc::new))
            .collect::<Result<_>>()?;
        for (first, parts) in &layout {
            for (i, p) in parts.iter().enumerate() {
                columns.push(Arc::new(reduce_column(state.column(first + i), &g, p.op)));
            }
        }
        merged = Table::from_shared(state.schema_ref().clone(), columns)?;
        &merged
    } else {
        state
    };

    let mut fields: Vec<Field> = schema.fields()[..key_count].to_vec();
    let mut columns: Vec<Arc<Column>> = (0..key_count).map(|c| state.column_arc(c).clone()).collect();
    for (agg, (first, parts)) in aggs.iter().zip(&layout) {
        let name = schema.field(*first).name.strip_suffix(parts[0].suffix).unwrap_or(&schema.field(*first).name).to_string();
        let col = match agg.func {
            AggFn::Sum | AggFn::Count | AggFn::Min | AggFn::Max => state.column_arc(*first).clone(),
            AggFn::Mean => {
                let (s, c) = (f64s(state.column(*first)), i64s(state.column(first + 1)));
                Arc::new(Column::Float64(s.iter().zip(c).map(|(s, c)| s / *c as f64).collect()))
            }
            AggFn::Std => {
                let x2 = f64s(state.column(*first));
                let x = f64s(state.column(first + 1));
                let n = i64s(state.column(first + 2));
                Arc::new(Column::Float64(
                    (0..state.len()).map(|i| population_std(x2[i], x[i], n[i])).collect(),
                ))
            }
        };
        fields.push(Field::new(name, col.domain()));
        columns.push(col);
    }
    Table::from_shared(Arc::new(Schema::new(fields)?), columns)
}

fn f64s(c: &Column) -> &[f64] {
    match c {
        Column::Float64(v) => v,
        _ => unreachable!("layout checked"),
    }
}

fn i64s(c: &Column) -> &[i64] {
    match c {
        Column::Int64(v) => v,
        _ => unreachable!("layout checked"),
    }
}

pub(crate) fn population_std(sum_x2: f64, sum_x: f64, count: i64) -> f64 {
    let n = count as f64;
    let mean = sum_x / n;
    (sum_x2 / n - mean * mean).max(0.0).sqrt()
}

/// Intermediate result of one scalar aggregate; merges associatively.
#[derive(Debug, Clone, PartialEq)]
pub enum AggPartial {
    SumInt(i64),
    SumFloat(f64),
    Count(i64),
    Min(Option<Value>),
    Max(Option<Value>),
    Mean { sum_x: f64, count: i64 },
    Std { sum_x2: f64, sum_x: f64, count: i64 },
}

fn better(candidate: ValueRef<'_>, current: &Option<Value>, want: Ordering) -> bool {
    match current {
        None => true,
        Some(cur) => {
            let ord = match (candidate, cur.as_ref()) {
                (ValueRef::Int64(a), ValueRef::Int64(b)) => a.cmp(&b),
                (ValueRef::Float64(a), ValueRef::Float64(b)) => compare_f64(a, b),
                (ValueRef::Utf8(a), ValueRef::Utf8(b)) => a.cmp(b),
                _ => Ordering::Equal,
            };
            ord == want
        }
    }
}

impl AggPartial {
    /// Partial over rows `range` of `col`.
    pub fn over(func: AggFn, col: &Column, range: Range<usize>) -> Result<AggPartial> {
        func.output_domain(col.domain())?;
        Ok(match func {
            AggFn::Sum => match col {
                Column::Int64(v) => AggPartial::SumInt(v[range].iter().fold(0, |a, b| a.wrapping_add(*b))),
                Column::Float64(v) => AggPartial::SumFloat(v[range].iter().fold(0.0, |a, b| a + b)),
                Column::Utf8(_) => unreachable!(),
            },
            AggFn::Count => AggPartial::Count(range.len() as i64),
            AggFn::Min | AggFn::Max => {
                let want = if func == AggFn::Min { Ordering::Less } else { Ordering::Greater };
                let mut best: Option<Value> = None;
                for r in range {
                    let v = col.get(r);
                    if better(v, &best, want) {
                        best = Some(v.to_owned());
                    }
                }
                if func == AggFn::Min {
                    AggPartial::Min(best)
                } else {
                    AggPartial::Max(best)
                }
            }
            AggFn::Mean => {
                let mut sum_x = 0.0;
                for r in range.clone() {
                    sum_x += col.get(r).as_f64().expect("numeric");
                }
                AggPartial::Mean { sum_x, count: range.len() as i64 }
            }
            AggFn::Std => {
                let (mut sum_x2, mut sum_x) = (0.0, 0.0);
                for r in range.clone() {
                    let x = col.get(r).as_f64().expect("numeric");
                    sum_x2 += x * x;
                    sum_x += x;
                }
                AggPartial::Std { sum_x2, sum_x, count: range.len() as i64 }
            }
        })
    }

    pub fn merge(&mut self, other: &AggPartial) -> Result<()> {
        match (self, other) {
            (AggPartial::SumInt(a), AggPartial::SumInt(b)) => *a = a.wrapping_add(*b),
            (AggPartial::SumFloat(a), AggPartial::SumFloat(b)) => *a += b,
            (AggPartial::Count(a), AggPartial::Count(b)) => *a += b,
            (AggPartial::Min(a), AggPartial::Min(b)) => {
                if let Some(v) = b {
                    if better(v.as_ref(), a, Ordering::Less) {
                        *a = Some(v.clone());
                    }
                }
            }
            (AggPartial::Max(a), AggPartial::Max(b)) => {
                if let Some(v) = b {
                    if better(v.as_ref(), a, Ordering::Greater) {
                        *a = Some(v.clone());
                    }
                }
            }
            (AggPartial::Mean { sum_x, count }, AggPartial::Mean { sum_x: s, count: c }) => {
                *sum_x += s;
                *count += c;
            }
            (
                AggPartial::Std { sum_x2, sum_x, count },
                AggPartial::Std { sum_x2: s2, sum_x: s, count: c },
            ) => {
                *sum_x2 += s2;
                *sum_x += s;
                *count += c;
            }
            (a, b) => return Err(Error::Op(format!("cannot merge {a:?} with {b:?}"))),
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<Value> {
        let empty = |what: &str| Error::MissingValue(format!("{what} of an empty column"));
        match self {
            AggPartial::SumInt(v) => Ok(Value::Int64(*v)),
            AggPartial::SumFloat(v) => Ok(Value::Float64(*v)),
            AggPartial::Count(v) => Ok(Value::Int64(*v)),
            AggPartial::Min(v) => v.clone().ok_or_else(|| empty("min")),
            AggPartial::Max(v) => v.clone().ok_or_else(|| empty("max")),
            AggPartial::Mean { count: 0, .. } => Err(empty("mean")),
            AggPartial::Mean { sum_x, count } => Ok(Value::Float64(sum_x / *count as f64)),
            AggPartial::Std { count: 0, .. } => Err(empty("std")),
            AggPartial::Std { sum_x2, sum_x, count } => {
                Ok(Value::Float64(population_std(*sum_x2, *sum_x, *count)))
            }
        }
    }
}

/// Schema of the one-row result of aggregating `aggs` over `schema`.
pub(crate) fn aggregate_schema(schema: &Schema, aggs: &[AggSpec]) -> Result<Schema> {
    let fields = aggs
        .iter()
        .map(|a| {
            if a.column >= schema.width() {
                return Err(Error::IndexOutOfBounds { index: a.column, len: schema.width() });
            }
            Ok(Field::new(
                a.output_name(schema),
                a.func.output_domain(schema.field(a.column).domain)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Schema::new(fields)
}

pub(crate) fn partials(table: &Table, aggs: &[AggSpec]) -> Result<Vec<AggPartial>> {
    aggs.iter()
        .map(|a| {
            let (_, col) = a.input(table)?;
            AggPartial::over(a.func, col, 0..table.len())
        })
        .collect()
}

pub(crate) fn finish_row(schema: Schema, partials: &[AggPartial]) -> Result<Table> {
    let columns = schema
        .fields()
        .iter()
        .zip(partials)
        .map(|(f, p)| {
            let mut c = Column::with_capacity(f.domain, 1);
            c.push(p.finish()?.as_ref())?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    Table::from_columns(schema, columns)
}

/// Whole-column aggregation; a one-row table with one column per aggregate.
pub fn local_aggregate(table: &Table, aggs: &[AggSpec]) -> Result<Table> {
    let schema = aggregate_schema(table.schema(), aggs)?;
    finish_row(schema, &partials(table, aggs)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(k: Vec<i64>, v: Vec<i64>) -> Table {
        let s = Schema::from_pairs([("k", Domain::Int64), ("v", Domain::Int64)]).unwrap();
        Table::from_columns(s, vec![k.into(), v.into()]).unwrap()
    }

    #[test]
    fn single_group_sum_and_constant_std() {
        let t = kv(vec![0, 0, 0], vec![1, 2, 3]);
        let g = local_groupby(&t, &[0], &[AggSpec::new(AggFn::Sum, 1)]).unwrap();
        assert_eq!(g.row(0), vec![Value::Int64(0), Value::Int64(6)]);
        assert_eq!(g.schema().field(1).name, "sum_v");

        let c = kv(vec![1; 4], vec![7; 4]);
        let s = local_groupby(&c, &[0], &[AggSpec::new(AggFn::Std, 1)]).unwrap();
        assert_eq!(s.value(1, 0), ValueRef::Float64(0.0));
    }

    #[test]
    fn empty_aggregates() {
        let t = kv(vec![], vec![]);
        let sum = local_aggregate(&t, &[AggSpec::new(AggFn::Sum, 1), AggSpec::new(AggFn::Count, 1)]).unwrap();
        assert_eq!(sum.row(0), vec![Value::Int64(0), Value::Int64(0)]);
        assert!(matches!(
            local_aggregate(&t, &[AggSpec::new(AggFn::Mean, 1)]),
            Err(Error::MissingValue(_))
        ));
    }

    #[test]
    fn utf8_rules() {
        let s = Schema::from_pairs([("k", Domain::Int64), ("s", Domain::Utf8)]).unwrap();
        let t = Table::from_columns(s, vec![vec![1i64, 1, 2].into(), vec!["b", "a", "c"].into()]).unwrap();
        let g = local_groupby(
            &t,
            &[0],
            &[AggSpec::new(AggFn::Min, 1), AggSpec::new(AggFn::Max, 1), AggSpec::new(AggFn::Count, 1)],
        )
        .unwrap();
        assert_eq!(g.row(0), vec![Value::Int64(1), "a".into(), "b".into(), Value::Int64(2)]);
        assert!(matches!(
            local_groupby(&t, &[0], &[AggSpec::new(AggFn::Mean, 1)]),
            Err(Error::DomainMismatch(_))
        ));
        assert!(matches!(
            local_aggregate(&t, &[AggSpec::new(AggFn::Sum, 1)]),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn finalize_rejects_bad_state() {
        let t = kv(vec![1, 2], vec![3, 4]);
        assert!(matches!(
            groupby_finalize(&t, 1, &[AggSpec::new(AggFn::Mean, 1)]),
            Err(Error::SchemaMismatch(_))
        ));
        assert!(groupby_finalize(&t, 1, &[]).is_err());
    }

    #[test]
    fn merge_of_split_states() {
        let t = kv(vec![1, 2, 1, 3, 2, 1], vec![5, 6, 7, 8, 9, 10]);
        let aggs: Vec<AggSpec> = AggFn::ALL.iter().map(|&f| AggSpec::new(f, 1)).collect();
        let a = groupby_combine(&t.slice_rows(0, 3).unwrap(), &[0], &aggs).unwrap();
        let b = groupby_combine(&t.slice_rows(3, 6).unwrap(), &[0], &aggs).unwrap();
        let schema = a.schema_ref().clone();
        let both = crate::table::concat_tables(&schema, &[a, b]).unwrap();
        let merged = groupby_finalize(&both, 1, &aggs).unwrap();
        assert_eq!(merged, local_groupby(&t, &[0], &aggs).unwrap());
    }
}
