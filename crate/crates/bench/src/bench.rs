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

//! Timed runs and the CSV benchmark report.

use std::io::Write;
use std::str::FromStr;

use bspframe::comm::inproc;
use bspframe::comm::metrics::{PHASE_COMM, PHASE_LOCAL, PHASE_PARTITION};
use bspframe::{Error, NumericArray, Result, WorkerContext};

use crate::runner::{inputs_for, local_inputs, run_dist, Inputs, Split};
use crate::workload::WorkloadSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub warmup: usize,
    pub reps: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { warmup: 1, reps: 3 }
    }
}

/// One report line. Times are seconds; per-run times are the maximum over
/// ranks and counters the sum over ranks, taken from the median run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub operator: String,
    pub parallelism: usize,
    pub rows: usize,
    pub cardinality: f64,
    pub strategy: String,
    pub t_total: f64,
    pub t_partition: f64,
    pub t_comm: f64,
    pub t_local: f64,
    pub rows_shuffled: u64,
    pub bytes_sent: u64,
    pub speedup: Option<f64>,
    /// Set on rows recording a failed cell.
    pub error: Option<String>,
}

pub const CSV_HEADER: &str =
    "operator,P,N,C,strategy,t_total,t_partition,t_comm,t_local,rows_shuffled,bytes_sent,speedup";

impl BenchRow {
    fn failed(spec: &WorkloadSpec, message: String) -> BenchRow {
        BenchRow {
            operator: spec.op.name().into(),
            parallelism: spec.parallelism,
            rows: spec.rows,
            cardinality: spec.cardinality,
            strategy: spec.op.strategy().into(),
            t_total: f64::NAN,
            t_partition: f64::NAN,
            t_comm: f64::NAN,
            t_local: f64::NAN,
            rows_shuffled: 0,
            bytes_sent: 0,
            speedup: None,
            error: Some(message),
        }
    }

    /// A failed cell keeps its identifying fields, leaves the measurements
    /// empty and carries the message in the strategy column.
    pub fn csv_line(&self) -> String {
        let head = format!("{},{},{},{}", self.operator, self.parallelism, self.rows, self.cardinality);
        if let Some(e) = &self.error {
            let e = e.replace(['"', '\n'], " ");
            return format!("{head},\"error: {e}\",,,,,,,");
        }
        format!(
            "{head},{},{:.6},{:.6},{:.6},{:.6},{},{},{}",
            self.strategy,
            self.t_total,
            self.t_partition,
            self.t_comm,
            self.t_local,
            self.rows_shuffled,
            self.bytes_sent,
            self.speedup.map_or(String::new(), |s| format!("{s:.3}"))
        )
    }
}

impl FromStr for BenchRow {
    type Err = Error;

    /// Parses a line written by [`BenchRow::csv_line`].
    fn from_str(line: &str) -> Result<BenchRow> {
        let bad = || Error::InvalidSpec(format!("malformed report line `{line}`"));
        let f: Vec<&str> = line.trim_end().splitn(5, ',').collect();
        if f.len() != 5 {
            return Err(bad());
        }
        let mut row = BenchRow {
            operator: f[0].to_string(),
            parallelism: f[1].parse().map_err(|_| bad())?,
            rows: f[2].parse().map_err(|_| bad())?,
            cardinality: f[3].parse().map_err(|_| bad())?,
            strategy: String::new(),
            t_total: f64::NAN,
            t_partition: f64::NAN,
            t_comm: f64::NAN,
            t_local: f64::NAN,
            rows_shuffled: 0,
            bytes_sent: 0,
            speedup: None,
            error: None,
        };
        if let Some(rest) = f[4].strip_prefix("\"error: ") {
            row.error = Some(rest.split('"').next().unwrap_or_default().to_string());
            return Ok(row);
        }
        let m: Vec<&str> = f[4].split(',').collect();
        if m.len() != 8 {
            return Err(bad());
        }
        let secs = |s: &str| s.parse::<f64>().map_err(|_| bad());
        row.strategy = m[0].to_string();
        row.t_total = secs(m[1])?;
        row.t_partition = secs(m[2])?;
        row.t_comm = secs(m[3])?;
        row.t_local = secs(m[4])?;
        row.rows_shuffled = m[5].parse().map_err(|_| bad())?;
        row.bytes_sent = m[6].parse().map_err(|_| bad())?;
        row.speedup = if m[7].is_empty() { None } else { Some(secs(m[7])?) };
        Ok(row)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        s
    }

    pub fn find(&self, operator: &str, strategy: &str, parallelism: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| {
            r.operator == operator && r.strategy == strategy && r.parallelism == parallelism && r.error.is_none()
        })
    }
}

/// Collective: runs `warmup + reps` timed calls on an even split and
/// returns the summarised row on rank 0.
pub fn bench_on(
    ctx: &WorkerContext,
    spec: &WorkloadSpec,
    config: BenchConfig,
    inputs: &Inputs,
) -> Result<Option<BenchRow>> {
    let (a, b) = local_inputs(inputs, ctx.rank(), ctx.world_size(), Split::Even)?;
    let reps = config.reps.max(1);
    let mut times = Vec::with_capacity(reps * 4);
    let mut counts = Vec::with_capacity(reps * 2);
    for i in 0..config.warmup + reps {
        let (_, m) = run_dist(ctx, spec.op, &a, &b)?;
        if i >= config.warmup {
            times.extend(
                [m.total, m.phase(PHASE_PARTITION), m.phase(PHASE_COMM), m.phase(PHASE_LOCAL)]
                    .map(|d| d.as_secs_f64()),
            );
            counts.extend([m.rows_shuffled as i64, m.bytes_sent as i64]);
        }
    }
    let times = ctx.comm().gather_array(&NumericArray::Float64(times), 0)?;
    let counts = ctx.comm().gather_array(&NumericArray::Int64(counts), 0)?;
    let (Some(times), Some(counts)) = (times, counts) else { return Ok(None) };
    let runs: Vec<([f64; 4], [u64; 2])> = (0..reps)
        .map(|rep| {
            let mut t = [0f64; 4];
            let mut c = [0u64; 2];
            for (rt, rc) in times.iter().zip(&counts) {
                let rt = rt.as_f64().unwrap();
                let rc = rc.as_i64().unwrap();
                for k in 0..4 {
                    t[k] = t[k].max(rt[rep * 4 + k]);
                }
                for k in 0..2 {
                    c[k] += rc[rep * 2 + k] as u64;
                }
            }
            (t, c)
        })
        .collect();
    let mut order: Vec<usize> = (0..reps).collect();
    order.sort_by(|&x, &y| runs[x].0[0].total_cmp(&runs[y].0[0]));
    let (t, c) = runs[order[reps / 2]];
    Ok(Some(BenchRow {
        operator: spec.op.name().into(),
        parallelism: spec.parallelism,
        rows: spec.rows,
        cardinality: spec.cardinality,
        strategy: spec.op.strategy().into(),
        t_total: t[0],
        t_partition: t[1],
        t_comm: t[2],
        t_local: t[3],
        rows_shuffled: c[0],
        bytes_sent: c[1],
        speedup: (spec.parallelism == 1).then_some(1.0),
        error: None,
    }))
}

/// One cell on an in-process job; the inputs are generated once and shared.
pub fn bench_cell(spec: &WorkloadSpec, config: BenchConfig) -> Result<BenchRow> {
    let inputs = inputs_for(spec)?;
    let rows = inproc::run(spec.parallelism, |ctx| bench_on(&ctx, spec, config, &inputs));
    let mut root = None;
    for r in rows {
        if let Some(row) = r? {
            root = Some(row);
        }
    }
    Ok(root.expect("rank 0 reports"))
}

/// Runs every cell in process (adding the P=1 baseline of each workload
/// when missing) and fills in speedups. Rows are written to `out` as they
/// complete, so a failure leaves the finished rows plus an error row behind.
pub fn bench(matrix: &[WorkloadSpec], config: BenchConfig, out: Option<&mut dyn Write>) -> Result<BenchReport> {
    bench_with(matrix, out, |spec| bench_cell(spec, config))
}

/// As [`bench`] with a caller-supplied way of running one cell.
pub fn bench_with(
    matrix: &[WorkloadSpec],
    mut out: Option<&mut dyn Write>,
    mut run_cell: impl FnMut(&WorkloadSpec) -> Result<BenchRow>,
) -> Result<BenchReport> {
    let mut cells: Vec<WorkloadSpec> = Vec::new();
    for spec in matrix {
        let base = WorkloadSpec { parallelism: 1, ..*spec };
        for s in [base, *spec] {
            if !cells.contains(&s) {
                cells.push(s);
            }
        }
    }
    if let Some(w) = out.as_deref_mut() {
        writeln!(w, "{CSV_HEADER}")?;
    }
    let mut report = BenchReport::default();
    for spec in &cells {
        let mut row = run_cell(spec).unwrap_or_else(|e| BenchRow::failed(spec, e.to_string()));
        let baseline = report.rows.iter().find(|r| {
            r.error.is_none()
                && r.parallelism == 1
                && r.operator == row.operator
                && r.strategy == row.strategy
                && r.rows == row.rows
                && r.cardinality == row.cardinality
        });
        if row.error.is_none() && row.parallelism > 1 {
            row.speedup = baseline.map(|b| b.t_total / row.t_total);
        }
        if let Some(w) = out.as_deref_mut() {
            writeln!(w, "{}", row.csv_line())?;
            w.flush()?;
        }
        report.rows.push(row);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::Operator;

    #[test]
    fn single_cell_baseline() {
        let spec = WorkloadSpec::new(Operator::Select, 2000, 1, 0.5, 1);
        let report = bench(&[spec], BenchConfig { warmup: 0, reps: 1 }, None).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].speedup, Some(1.0));
        let csv = report.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line.split(',').count(), 12);
        let back: BenchRow = line.parse().unwrap();
        assert_eq!(back.csv_line(), line);
    }

    #[test]
    fn failed_cell_leaves_error_row() {
        let bad = WorkloadSpec::new(Operator::Select, 10, 2, 5.0, 1);
        let mut buf = Vec::new();
        let report = bench(&[bad], BenchConfig::default(), Some(&mut buf)).unwrap();
        assert!(report.rows.iter().all(|r| r.error.is_some()));
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert!(line.contains("error:"));
        assert!(line.parse::<BenchRow>().unwrap().error.is_some());
    }
}
