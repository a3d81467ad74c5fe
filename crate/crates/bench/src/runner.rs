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

//! Fixed operator instances: the distributed call and its serial oracle.

use std::path::PathBuf;

use bspframe::dist::{self, DistTable, EpOp, GroupbyOptions};
use bspframe::local::{self, AggFn, AggSpec, CmpOp, Expr, JoinSpec, Predicate, RowAggFn};
use bspframe::partition::rebalance;
use bspframe::pio::{self, Assignment, FileAssignment};
use bspframe::{Column, Domain, Error, OpMetrics, Result, Schema, SortKey, Table, ValueRef, WorkerContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gen::{gen_lookup_table, gen_table, VALUE_RANGE};
use crate::workload::{Operator, WorkloadSpec};

/// Global inputs of a workload, before partitioning.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub a: Table,
    /// Second operand for join and set operations; empty otherwise.
    pub b: Table,
}

fn set_projection(t: &Table, value_col: usize) -> Result<Table> {
    let keys = t.column(0).clone();
    let g = match t.column(value_col) {
        Column::Int64(v) => Column::Int64(v.iter().map(|x| x % 4).collect()),
        _ => unreachable!("generated columns are int64"),
    };
    Table::from_columns(Schema::from_pairs([("k", Domain::Int64), ("g", Domain::Int64)])?, vec![keys, g])
}

/// Deterministic inputs for `spec`. Joins use a single value column and a
/// lookup table of `max(1, min(N/10, 20 D))` rows over the same key pool;
/// set operations use `(k, v0 mod 4)` with a second table of `N/2` rows.
pub fn inputs_for(spec: &WorkloadSpec) -> Result<Inputs> {
    spec.validate()?;
    let d = spec.distinct_keys()?;
    let n = spec.rows;
    Ok(match spec.op {
        Operator::Join(_) => {
            let m = (n / 10).min(20 * d).max(1);
            Inputs {
                a: gen_table(n, 1, spec.cardinality, spec.seed)?,
                b: gen_lookup_table(m, d, spec.seed.wrapping_add(1))?,
            }
        }
        Operator::Union | Operator::Difference => {
            let a = gen_table(n, 1, spec.cardinality, spec.seed)?;
            let half = gen_lookup_table((n / 2).max(1), d, spec.seed.wrapping_add(1))?;
            Inputs { a: set_projection(&a, 1)?, b: set_projection(&half, 1)? }
        }
        _ => {
            let a = gen_table(n, 2, spec.cardinality, spec.seed)?;
            Inputs { b: Table::empty(a.schema_ref().clone()), a }
        }
    })
}

/// How the global inputs are cut into partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Even,
    /// Seeded random contiguous cuts; partitions may be empty.
    Random(u64),
}

pub fn split_bounds(len: usize, parts: usize, split: Split) -> Vec<usize> {
    let mut bounds = vec![0];
    match split {
        Split::Even => {
            let targets = bspframe::partition::even_targets(len, parts);
            for t in targets {
                bounds.push(bounds.last().unwrap() + t);
            }
        }
        Split::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut cuts: Vec<usize> = (1..parts).map(|_| rng.gen_range(0..=len)).collect();
            cuts.sort_unstable();
            bounds.extend(cuts);
            bounds.push(len);
        }
    }
    bounds
}

/// This rank's slices of the inputs.
pub fn local_inputs(inputs: &Inputs, rank: usize, parts: usize, split: Split) -> Result<(Table, Table)> {
    let salt = |s: Split, k: u64| match s {
        Split::Random(seed) => Split::Random(seed ^ k),
        even => even,
    };
    let ba = split_bounds(inputs.a.len(), parts, salt(split, 0));
    let bb = split_bounds(inputs.b.len(), parts, salt(split, 0x9e37));
    Ok((
        inputs.a.slice_rows(ba[rank], ba[rank + 1])?,
        inputs.b.slice_rows(bb[rank], bb[rank + 1])?,
    ))
}

/// How a distributed result is compared with its oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultKind {
    /// Partitions concatenated, compared as a multiset.
    Partitioned,
    /// Partitions concatenated in rank order, compared row by row.
    Ordered,
    /// Identical on every rank.
    Replicated,
}

pub fn result_kind(op: Operator) -> ResultKind {
    match op {
        Operator::Aggregate | Operator::Length | Operator::Equals => ResultKind::Replicated,
        Operator::Sort | Operator::Rolling => ResultKind::Ordered,
        // EP operators keep the row order of their input
        op if op.is_ep() => ResultKind::Ordered,
        _ => ResultKind::Partitioned,
    }
}

pub fn ep_op(op: Operator) -> Option<EpOp> {
    Some(match op {
        Operator::Select => {
            EpOp::Select(Predicate::cmp(Expr::col("v0"), CmpOp::Lt, Expr::lit(VALUE_RANGE / 2)))
        }
        Operator::Project => EpOp::Project(vec!["v0".into(), "k".into()]),
        Operator::Map => EpOp::map("v0", Domain::Int64, |v| match v {
            ValueRef::Int64(x) => Ok((x * 2 + 1).into()),
            other => Err(Error::DomainMismatch(format!("map expects int64, got {other}"))),
        }),
        Operator::Arith => EpOp::Arith {
            name: "w".into(),
            expr: Expr::col("k").mul(Expr::col("v0")).add(Expr::col("v1")),
        },
        Operator::RowAggregate => EpOp::RowAggregate {
            name: "m".into(),
            columns: vec![0, 1, 2],
            func: RowAggFn::Mean,
        },
        _ => return None,
    })
}

pub fn groupby_aggs() -> Vec<AggSpec> {
    AggFn::ALL.iter().map(|&f| AggSpec::new(f, 1)).collect()
}

pub fn aggregate_aggs() -> Vec<AggSpec> {
    let mut a = groupby_aggs();
    a.push(AggSpec::new(AggFn::Sum, 2));
    a
}

pub fn sort_keys() -> [SortKey; 2] {
    [SortKey::asc(0), SortKey::desc(1)]
}

pub const ROLLING_WINDOW: usize = 5;

pub fn rolling_agg() -> AggSpec {
    AggSpec::new(AggFn::Mean, 1)
}

fn join_spec() -> JoinSpec {
    JoinSpec::inner(vec![0], vec![0])
}

fn scalar(name: &str, v: i64) -> Result<Table> {
    Table::from_columns(Schema::from_pairs([(name, Domain::Int64)])?, vec![Column::Int64(vec![v])])
}

/// Runs the operator on this rank's partitions and returns its local result
/// with the metrics of the operator call. Preparation (such as building a
/// second distributed operand) is not part of the metrics.
pub fn run_dist(ctx: &WorkerContext, op: Operator, a: &Table, b: &Table) -> Result<(Table, OpMetrics)> {
    let df = DistTable::new(ctx, a.clone())?;
    let out = match op {
        op if op.is_ep() => dist::dist_ep(&df, &ep_op(op).unwrap())?.into_local(),
        Operator::Join(algorithm) => {
            let right = DistTable::new(ctx, b.clone())?;
            dist::dist_join(&df, &right, &join_spec(), algorithm)?.into_local()
        }
        Operator::Union | Operator::Difference => {
            let other = DistTable::new(ctx, b.clone())?;
            if op == Operator::Union {
                dist::dist_union(&df, &other)?.into_local()
            } else {
                dist::dist_difference(&df, &other)?.into_local()
            }
        }
        Operator::Unique => dist::dist_unique(&df, &[0])?.into_local(),
        Operator::Groupby(strategy) => {
            let opts = GroupbyOptions { strategy, ..Default::default() };
            dist::dist_groupby_with(&df, &[0], &groupby_aggs(), opts)?.into_local()
        }
        Operator::Aggregate => dist::dist_aggregate(&df, &aggregate_aggs())?,
        Operator::Length => scalar("length", dist::dist_length(&df)? as i64)?,
        Operator::Equals => {
            // the same rows under a different partitioning
            let moved = DistTable::new(ctx, rebalance(ctx, a, None)?)?;
            scalar("equal", i64::from(dist::dist_equals(&df, &moved)?))?
        }
        Operator::Sort => dist::dist_sort(&df, &sort_keys())?.into_local(),
        Operator::Rolling => dist::dist_rolling(&df, ROLLING_WINDOW, &rolling_agg())?.into_local(),
        Operator::CsvRoundTrip => return csv_round_trip(ctx, &df),
        _ => unreachable!("all operators covered"),
    };
    Ok((out, ctx.last_metrics()))
}

/// Writes every partition, then reads the files back with rank `r` taking
/// the file of rank `P - 1 - r`. Metrics cover the read.
fn csv_round_trip(ctx: &WorkerContext, df: &DistTable) -> Result<(Table, OpMetrics)> {
    let tmp = if ctx.rank() == 0 { Some(tempfile::tempdir()?) } else { None };
    let dir_table = tmp
        .as_ref()
        .map(|d| {
            let path = d.path().to_string_lossy().into_owned();
            Table::from_columns(Schema::from_pairs([("dir", Domain::Utf8)])?, vec![vec![path].into()])
        })
        .transpose()?;
    let shared = dist::dist_broadcast_df(ctx, dir_table.as_ref(), 0)?;
    let dir = PathBuf::from(match shared.value(0, 0) {
        ValueRef::Utf8(s) => s.to_string(),
        _ => unreachable!(),
    });
    let paths = pio::write_csv_dist(df, &dir, "part")?;
    let p = paths.len();
    let per_rank = (0..p).map(|r| vec![paths[p - 1 - r].clone()]).collect();
    let read = pio::read_csv_dist(ctx, &[], df.schema(), &Assignment::Custom(FileAssignment { per_rank }))?;
    let metrics = ctx.last_metrics();
    // keep the directory alive until every rank has read
    ctx.comm().barrier()?;
    drop(tmp);
    Ok((read.into_local(), metrics))
}

/// Serial reference result on the global inputs.
pub fn run_serial(op: Operator, inputs: &Inputs) -> Result<Table> {
    let a = &inputs.a;
    match op {
        op if op.is_ep() => ep_op(op).unwrap().apply(a),
        Operator::Join(_) => local::local_join(a, &inputs.b, &join_spec()),
        Operator::Union => local::local_union(a, &inputs.b),
        Operator::Difference => local::local_difference(a, &inputs.b),
        Operator::Unique => local::local_unique(a, &[0]),
        Operator::Groupby(_) => local::local_groupby(a, &[0], &groupby_aggs()),
        Operator::Aggregate => local::local_aggregate(a, &aggregate_aggs()),
        Operator::Length => scalar("length", a.len() as i64),
        Operator::Equals => scalar("equal", 1),
        Operator::Sort => local::local_sort(a, &sort_keys()),
        Operator::Rolling => local::local_rolling(a, ROLLING_WINDOW, &rolling_agg()),
        Operator::CsvRoundTrip => Ok(a.clone()),
        _ => unreachable!("all operators covered"),
    }
}
