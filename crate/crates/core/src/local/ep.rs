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

//! Row-wise operators: selection, projection, element-wise maps and
//! arithmetic, row aggregation.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::table::{compare_f64, Column, Domain, Table, Value, ValueRef};

/// Column expression evaluated over every row of a table.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Col(String),
    Lit(Value),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Always produces Float64.
    Div(Box<Expr>, Box<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn col(name: &str) -> Expr {
        Expr::Col(name.to_string())
    }

    pub fn lit(v: impl Into<Value>) -> Expr {
        Expr::Lit(v.into())
    }

    pub fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }

    pub fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }

    pub fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }

    pub fn eval(&self, table: &Table) -> Result<Column> {
        let n = table.len();
        match self {
            Expr::Col(name) => Ok(table.column_by_name(name)?.clone()),
            Expr::Lit(v) => Ok(match v {
                Value::Int64(x) => Column::Int64(vec![*x; n]),
                Value::Float64(x) => Column::Float64(vec![*x; n]),
                Value::Utf8(x) => Column::Utf8(vec![x.clone(); n]),
            }),
            Expr::Add(a, b) => arith(a.eval(table)?, b.eval(table)?, "+", i64::wrapping_add, |x, y| x + y),
            Expr::Sub(a, b) => arith(a.eval(table)?, b.eval(table)?, "-", i64::wrapping_sub, |x, y| x - y),
            Expr::Mul(a, b) => arith(a.eval(table)?, b.eval(table)?, "*", i64::wrapping_mul, |x, y| x * y),
            Expr::Div(a, b) => {
                let (x, y) = (to_f64(a.eval(table)?, "/")?, to_f64(b.eval(table)?, "/")?);
                Ok(Column::Float64(x.iter().zip(&y).map(|(p, q)| p / q).collect()))
            }
        }
    }
}

fn to_f64(c: Column, op: &str) -> Result<Vec<f64>> {
    match c {
        Column::Int64(v) => Ok(v.into_iter().map(|x| x as f64).collect()),
        Column::Float64(v) => Ok(v),
        Column::Utf8(_) => Err(Error::DomainMismatch(format!("`{op}` over utf8"))),
    }
}

fn arith(
    a: Column,
    b: Column,
    op: &str,
    int: fn(i64, i64) -> i64,
    float: fn(f64, f64) -> f64,
) -> Result<Column> {
    match (a, b) {
        (Column::Int64(x), Column::Int64(y)) => {
            Ok(Column::Int64(x.iter().zip(&y).map(|(p, q)| int(*p, *q)).collect()))
        }
        (a, b) => {
            let (x, y) = (to_f64(a, op)?, to_f64(b, op)?);
            Ok(Column::Float64(x.iter().zip(&y).map(|(p, q)| float(*p, *q)).collect()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn test(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }
}

/// Boolean row predicate.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Const(bool),
    Cmp(Expr, CmpOp, Expr),
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    pub fn cmp(lhs: Expr, op: CmpOp, rhs: Expr) -> Predicate {
        Predicate::Cmp(lhs, op, rhs)
    }

    pub fn and(self, other: Predicate) -> Predicate {
        Predicate::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Predicate) -> Predicate {
        Predicate::Or(Box::new(self), Box::new(other))
    }

    pub fn negate(self) -> Predicate {
        Predicate::Not(Box::new(self))
    }

    pub fn eval(&self, table: &Table) -> Result<Vec<bool>> {
        match self {
            Predicate::Const(b) => Ok(vec![*b; table.len()]),
            Predicate::Cmp(a, op, b) => compare_columns(&a.eval(table)?, *op, &b.eval(table)?),
            Predicate::And(a, b) => {
                let (x, y) = (a.eval(table)?, b.eval(table)?);
                Ok(x.iter().zip(&y).map(|(p, q)| *p && *q).collect())
            }
            Predicate::Or(a, b) => {
                let (x, y) = (a.eval(table)?, b.eval(table)?);
                Ok(x.iter().zip(&y).map(|(p, q)| *p || *q).collect())
            }
            Predicate::Not(a) => Ok(a.eval(table)?.into_iter().map(|p| !p).collect()),
        }
    }
}

fn compare_columns(a: &Column, op: CmpOp, b: &Column) -> Result<Vec<bool>> {
    Ok(match (a, b) {
        (Column::Int64(x), Column::Int64(y)) => {
            x.iter().zip(y).map(|(p, q)| op.test(p.cmp(q))).collect()
        }
        (Column::Utf8(x), Column::Utf8(y)) => {
            x.iter().zip(y).map(|(p, q)| op.test(p.cmp(q))).collect()
        }
        (Column::Utf8(_), _) | (_, Column::Utf8(_)) => {
            return Err(Error::DomainMismatch(format!(
                "cannot compare {} with {}",
                a.domain(),
                b.domain()
            )))
        }
        _ => {
            let x = to_f64(a.clone(), "compare")?;
            let y = to_f64(b.clone(), "compare")?;
            x.iter()
                .zip(&y)
                .map(|(p, q)| op.test(compare_f64(*p, *q)))
                .collect()
        }
    })
}

fn keep_mask(table: &Table, mask: &[bool]) -> Result<Table> {
    let idx: Vec<usize> = mask
        .iter()
        .enumerate()
        .filter_map(|(i, &k)| k.then_some(i))
        .collect();
    if idx.len() == table.len() {
        return Ok(table.clone());
    }
    table.take_rows(&idx)
}

/// Rows satisfying `pred`, in input order.
pub fn select(table: &Table, pred: &Predicate) -> Result<Table> {
    let mask = pred.eval(table)?;
    keep_mask(table, &mask)
}

/// Rows for which `keep(table, row)` returns true, in input order.
pub fn filter<F>(table: &Table, mut keep: F) -> Result<Table>
where
    F: FnMut(&Table, usize) -> Result<bool>,
{
    let mask = (0..table.len())
        .map(|r| keep(table, r))
        .collect::<Result<Vec<_>>>()?;
    keep_mask(table, &mask)
}

pub fn project(table: &Table, columns: &[&str]) -> Result<Table> {
    table.project(columns)
}

/// Replaces `column` with `f` applied to every value. `f` must return values
/// of `domain`.
pub fn map_column<F>(table: &Table, column: &str, domain: Domain, f: F) -> Result<Table>
where
    F: Fn(ValueRef<'_>) -> Result<Value>,
{
    let idx = table.schema().index_of(column)?;
    let src = table.column(idx);
    let mut out = Column::with_capacity(domain, src.len());
    for v in src.iter() {
        let mapped = f(v)?;
        out.push(mapped.as_ref()).map_err(|_| {
            Error::DomainMismatch(format!(
                "map over `{column}` produced {} but declared {domain}",
                mapped.domain()
            ))
        })?;
    }
    table.replace_column(idx, out)
}

/// Appends `expr` evaluated per row as a new column `name`.
pub fn row_arithmetic(table: &Table, name: &str, expr: &Expr) -> Result<Table> {
    let col = expr.eval(table)?;
    table.with_column(name, col)
}

/// Reductions across the columns of one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowAggFn {
    Sum,
    Min,
    Max,
    Mean,
}

/// Per-row aggregate across `columns`; Int64 when every input is Int64 and the
/// function is Sum/Min/Max, Float64 otherwise.
pub fn row_aggregate(table: &Table, columns: &[usize], func: RowAggFn) -> Result<Column> {
    if columns.is_empty() {
        return Err(Error::Usage("row aggregate needs at least one column".into()));
    }
    for &c in columns {
        if c >= table.width() {
            return Err(Error::IndexOutOfBounds {
                index: c,
                len: table.width(),
            });
        }
        if !table.schema().field(c).domain.is_numeric() {
            return Err(Error::DomainMismatch(format!(
                "row aggregate over utf8 column `{}`",
                table.schema().field(c).name
            )));
        }
    }
    let all_int = columns
        .iter()
        .all(|&c| table.schema().field(c).domain == Domain::Int64);
    let n = table.len();
    if all_int && func != RowAggFn::Mean {
        let cols: Vec<&[i64]> = columns
            .iter()
            .map(|&c| match table.column(c) {
                Column::Int64(v) => v.as_slice(),
                _ => unreachable!(),
            })
            .collect();
        let out = (0..n)
            .map(|r| {
                let it = cols.iter().map(|c| c[r]);
                match func {
                    RowAggFn::Sum => it.fold(0i64, i64::wrapping_add),
                    RowAggFn::Min => it.min().unwrap(),
                    RowAggFn::Max => it.max().unwrap(),
                    RowAggFn::Mean => unreachable!(),
                }
            })
            .collect();
        return Ok(Column::Int64(out));
    }
    let out = (0..n)
        .map(|r| {
            let it = columns
                .iter()
                .map(|&c| table.value(c, r).as_f64().expect("numeric"));
            match func {
                RowAggFn::Sum => it.sum(),
                RowAggFn::Mean => it.sum::<f64>() / columns.len() as f64,
                RowAggFn::Min => it.min_by(|a, b| compare_f64(*a, *b)).unwrap(),
                RowAggFn::Max => it.max_by(|a, b| compare_f64(*a, *b)).unwrap(),
            }
        })
        .collect();
    Ok(Column::Float64(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Schema;

    fn t() -> Table {
        let s = Schema::from_pairs([
            ("a", Domain::Int64),
            ("b", Domain::Int64),
            ("s", Domain::Utf8),
        ])
        .unwrap();
        Table::from_columns(
            s,
            vec![
                (1..=10).collect::<Vec<i64>>().into(),
                (1..=10).map(|x| x * 10).collect::<Vec<i64>>().into(),
                (1..=10).map(|x| format!("s{x}")).collect::<Vec<_>>().into(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn select_cases() {
        let t = t();
        assert_eq!(select(&t, &Predicate::Const(true)).unwrap(), t);
        let none = select(&t, &Predicate::Const(false)).unwrap();
        assert_eq!(none.len(), 0);
        assert_eq!(none.schema(), t.schema());
        let gt5 = select(&t, &Predicate::cmp(Expr::col("a"), CmpOp::Gt, Expr::lit(5i64))).unwrap();
        assert_eq!(gt5.column(0), &Column::Int64(vec![6, 7, 8, 9, 10]));
        let err = select(&t, &Predicate::cmp(Expr::col("s"), CmpOp::Gt, Expr::lit(5i64)));
        assert!(matches!(err, Err(Error::DomainMismatch(_))));
        assert!(matches!(
            select(&t, &Predicate::cmp(Expr::col("zz"), CmpOp::Gt, Expr::lit(5i64))),
            Err(Error::UnknownColumn(_))
        ));
    }

    #[test]
    fn arithmetic_and_projection() {
        let t = t();
        assert_eq!(project(&t, &["a", "b", "s"]).unwrap(), t);
        let plus0 = row_arithmetic(&t, "c", &Expr::col("a").add(Expr::lit(0i64))).unwrap();
        assert_eq!(plus0.column(3), t.column(0));
        let prod = row_arithmetic(&t, "c", &Expr::col("a").mul(Expr::col("b"))).unwrap();
        assert_eq!(prod.column(3), &Column::Int64((1..=10).map(|x| x * x * 10).collect()));
        let ratio = row_arithmetic(&t, "c", &Expr::col("b").div(Expr::col("a"))).unwrap();
        assert_eq!(ratio.column(3), &Column::Float64(vec![10.0; 10]));
        assert!(row_arithmetic(&t, "c", &Expr::col("s").add(Expr::lit(1i64))).is_err());
    }

    #[test]
    fn map_checks_domain() {
        let t = t();
        let m = map_column(&t, "a", Domain::Int64, |v| match v {
            ValueRef::Int64(x) => Ok(Value::Int64(x * 2)),
            _ => unreachable!(),
        })
        .unwrap();
        assert_eq!(m.column(0), &Column::Int64((1..=10).map(|x| x * 2).collect()));
        let bad = map_column(&t, "a", Domain::Int64, |_| Ok(Value::Float64(1.0)));
        assert!(matches!(bad, Err(Error::DomainMismatch(_))));
        let as_str = map_column(&t, "a", Domain::Utf8, |v| Ok(Value::Utf8(v.to_string()))).unwrap();
        assert_eq!(as_str.schema().field(0).domain, Domain::Utf8);
    }

    #[test]
    fn row_aggregates() {
        let s = Schema::from_pairs([("x", Domain::Int64), ("y", Domain::Int64)]).unwrap();
        let t = Table::from_columns(s, vec![vec![1i64, 2].into(), vec![10i64, 20].into()]).unwrap();
        assert_eq!(row_aggregate(&t, &[0, 1], RowAggFn::Sum).unwrap(), Column::Int64(vec![11, 22]));
        assert_eq!(row_aggregate(&t, &[0, 1], RowAggFn::Max).unwrap(), Column::Int64(vec![10, 20]));
        assert_eq!(
            row_aggregate(&t, &[0, 1], RowAggFn::Mean).unwrap(),
            Column::Float64(vec![5.5, 11.0])
        );
        assert!(row_aggregate(&t, &[], RowAggFn::Sum).is_err());
    }
}
