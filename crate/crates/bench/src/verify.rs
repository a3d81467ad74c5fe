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

//! Distributed result against the serial oracle.

use std::fmt;

use bspframe::comm::inproc;
use bspframe::{concat_tables, Column, Domain, Error, Result, Schema, Table, ValueRef, WorkerContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::runner::{inputs_for, local_inputs, result_kind, run_dist, run_serial, ResultKind, Split};
use crate::workload::WorkloadSpec;

/// Relative tolerance for Float64 cells.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub spec: WorkloadSpec,
    pub passed: bool,
    pub detail: String,
    /// Rows and bytes sent to other ranks by the operator, summed over ranks.
    pub rows_shuffled: u64,
    pub bytes_sent: u64,
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.spec;
        write!(
            f,
            "{} {} P={} N={} C={} seed={}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            s.op,
            s.parallelism,
            s.rows,
            s.cardinality,
            s.seed,
            self.detail
        )
    }
}

fn close(a: f64, b: f64) -> bool {
    a == b
        || (a.is_nan() && b.is_nan())
        || (a - b).abs() <= FLOAT_TOLERANCE * a.abs().max(b.abs())
}

/// Row-by-row comparison; `None` when equal within tolerance.
pub fn compare_tables(got: &Table, expected: &Table) -> Option<String> {
    if got.schema() != expected.schema() {
        return Some(format!("schema {} != {}", got.schema(), expected.schema()));
    }
    if got.len() != expected.len() {
        return Some(format!("{} rows, expected {}", got.len(), expected.len()));
    }
    for c in 0..got.width() {
        for r in 0..got.len() {
            let (x, y) = (got.value(c, r), expected.value(c, r));
            let same = match (x, y) {
                (ValueRef::Float64(a), ValueRef::Float64(b)) => close(a, b),
                _ => x == y,
            };
            if !same {
                return Some(format!(
                    "row {r} column `{}`: {x} != {y}",
                    got.schema().field(c).name
                ));
            }
        }
    }
    None
}

/// Changes one cell (or adds a row to an empty table) at a seeded position.
pub fn inject_fault(t: &Table, seed: u64) -> Result<Table> {
    if t.is_empty() {
        let cols = t.schema().domains().map(|d| match d {
            Domain::Int64 => Column::Int64(vec![0]),
            Domain::Float64 => Column::Float64(vec![0.0]),
            Domain::Utf8 => Column::Utf8(vec![String::new()]),
        });
        let extra = Table::from_columns(t.schema().clone(), cols.collect())?;
        return concat_tables(t.schema_ref(), &[t.clone(), extra]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (col, row) = (rng.gen_range(0..t.width()), rng.gen_range(0..t.len()));
    let mut c = t.column(col).clone();
    match &mut c {
        Column::Int64(v) => v[row] = v[row].wrapping_add(1),
        Column::Float64(v) => v[row] = if v[row].is_finite() { v[row] + 1.0 } else { 0.0 },
        Column::Utf8(v) => v[row].push('x'),
    }
    t.replace_column(col, c)
}

fn status_table(passed: bool, detail: &str, rows: u64, bytes: u64) -> Result<Table> {
    let schema = Schema::from_pairs([
        ("passed", Domain::Int64),
        ("detail", Domain::Utf8),
        ("rows", Domain::Int64),
        ("bytes", Domain::Int64),
    ])?;
    Table::from_columns(
        schema,
        vec![
            vec![i64::from(passed)].into(),
            vec![detail.to_string()].into(),
            vec![rows as i64].into(),
            vec![bytes as i64].into(),
        ],
    )
}

/// Collective verification: every rank derives the same global inputs,
/// runs the operator on its slice, and rank 0 checks the gathered result
/// against the serial oracle. The verdict is returned on every rank.
/// With `fault`, rank 0 corrupts the gathered result before checking.
pub fn verify_on(ctx: &WorkerContext, spec: &WorkloadSpec, fault: Option<u64>) -> Result<VerifyReport> {
    let inputs = inputs_for(spec)?;
    verify_with_inputs(ctx, spec, &inputs, fault)
}

pub fn verify_with_inputs(
    ctx: &WorkerContext,
    spec: &WorkloadSpec,
    inputs: &crate::runner::Inputs,
    fault: Option<u64>,
) -> Result<VerifyReport> {
    if ctx.world_size() != spec.parallelism {
        return Err(Error::InvalidSpec(format!(
            "workload wants P={} but the job has {} ranks",
            spec.parallelism,
            ctx.world_size()
        )));
    }
    let split = Split::Random(spec.seed.wrapping_mul(31).wrapping_add(7));
    let (a, b) = local_inputs(inputs, ctx.rank(), ctx.world_size(), split)?;
    let (out, metrics) = run_dist(ctx, spec.op, &a, &b)?;
    let kind = result_kind(spec.op);
    let gathered = ctx.comm().gather_table(&out, 0)?;
    let totals = ctx.comm().allreduce_array(
        &bspframe::NumericArray::Int64(vec![metrics.rows_shuffled as i64, metrics.bytes_sent as i64]),
        bspframe::ReduceOp::Sum,
    )?;
    let totals = totals.as_i64().unwrap().to_vec();
    let verdict = match gathered {
        Some(parts) => {
            let detail = check(spec, inputs, kind, &parts, fault);
            let (passed, detail) = match detail {
                Ok(None) => (true, "matches serial oracle".to_string()),
                Ok(Some(d)) => (false, d),
                Err(e) => (false, format!("oracle failed: {e}")),
            };
            Some(status_table(passed, &detail, totals[0] as u64, totals[1] as u64)?)
        }
        None => None,
    };
    let verdict = ctx.comm().broadcast_table(verdict.as_ref(), 0)?;
    let detail = match verdict.value(1, 0) {
        ValueRef::Utf8(s) => s.to_string(),
        _ => unreachable!(),
    };
    Ok(VerifyReport {
        spec: *spec,
        passed: verdict.value(0, 0) == ValueRef::Int64(1),
        detail,
        rows_shuffled: totals[0] as u64,
        bytes_sent: totals[1] as u64,
    })
}

fn check(
    spec: &WorkloadSpec,
    inputs: &crate::runner::Inputs,
    kind: ResultKind,
    parts: &[Table],
    fault: Option<u64>,
) -> Result<Option<String>> {
    let expected = run_serial(spec.op, inputs)?;
    if kind == ResultKind::Replicated {
        if let Some(r) = parts.iter().position(|p| p != &parts[0]) {
            return Ok(Some(format!("rank {r} holds a different replicated result")));
        }
    }
    let mut got = match kind {
        ResultKind::Replicated => parts[0].clone(),
        _ => concat_tables(parts[0].schema_ref(), parts)?,
    };
    if let Some(seed) = fault {
        got = inject_fault(&got, seed)?;
    }
    Ok(match kind {
        ResultKind::Partitioned => compare_tables(&got.sort_canonical(), &expected.sort_canonical()),
        _ => compare_tables(&got, &expected),
    })
}

/// Runs [`verify_on`] on an in-process job. Operator errors become a
/// failed report.
pub fn verify(spec: &WorkloadSpec, fault: Option<u64>) -> VerifyReport {
    let failed = |detail: String| VerifyReport {
        spec: *spec,
        passed: false,
        detail,
        rows_shuffled: 0,
        bytes_sent: 0,
    };
    let inputs = match inputs_for(spec) {
        Ok(i) => i,
        Err(e) => return failed(e.to_string()),
    };
    let reports = inproc::run(spec.parallelism, |ctx| verify_with_inputs(&ctx, spec, &inputs, fault));
    match reports.into_iter().next().expect("at least one rank") {
        Ok(r) => r,
        Err(e) => failed(format!("operator error: {e}")),
    }
}
