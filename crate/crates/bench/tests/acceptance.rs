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

//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if a hard criterion fails. The scaling smoke check is soft: it
//! is reported but never fails the run.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use bspframe::comm::inproc;
use bspframe::partition::rebalance;
use bspframe::{Column, NumericArray, ReduceOp, Table, WorkerContext};
use bspframe_bench::bench::{bench, BenchConfig};
use bspframe_bench::conformance::{render, run_script};
use bspframe_bench::launch::spawn_ranks;
use bspframe_bench::runner::{inputs_for, local_inputs, run_dist, Inputs, Split};
use bspframe_bench::{verify, Operator, WorkloadSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn ints(t: &Table, c: usize) -> &[i64] {
    match t.column(c) {
        Column::Int64(v) => v,
        _ => panic!("column {c} is not int64"),
    }
}

/// Runs `op` on an in-process job and returns each rank's output and
/// operator metrics.
fn run_job(op: Operator, inputs: &Inputs, p: usize, split: Split) -> Vec<(Table, bspframe::OpMetrics)> {
    inproc::run(p, |ctx| {
        let (a, b) = local_inputs(inputs, ctx.rank(), p, split).unwrap();
        run_dist(&ctx, op, &a, &b).unwrap()
    })
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut cells = Vec::new();
    let n = 10_000;
    for op in Operator::all() {
        for p in [1, 2, 3, 4, 8] {
            for c in [1.0 / n as f64, 1e-3, 0.9, 1.0] {
                cells.push(WorkloadSpec::new(op, n, p, c, 17 + p as u64));
            }
        }
        // the upper end of the row range, at one parallelism
        cells.push(WorkloadSpec::new(op, 100_000, 4, 0.9, 5));
    }
    let failures: Vec<String> =
        cells.iter().map(|s| verify(s, None)).filter(|r| !r.passed).map(|r| r.to_string()).collect();
    let secs = start.elapsed().as_secs_f64();
    for f in &failures {
        println!("    {f}");
    }
    outcome(
        failures.is_empty() && secs < 300.0,
        format!("{} of {} cells match the serial oracle in {secs:.1}s", cells.len() - failures.len(), cells.len()),
    )
}

fn transport_conformance() -> Outcome {
    let p = 4;
    let inproc_lines: String = inproc::run(p, |ctx| render(&run_script(&ctx).unwrap()))
        .iter()
        .enumerate()
        .flat_map(|(r, text)| text.lines().map(move |l| format!("{r}\t{l}\n")))
        .collect();
    let exe = Path::new(env!("CARGO_BIN_EXE_bspframe"));
    let tcp = match spawn_ranks(exe, &["comm-check".to_string()], p) {
        Ok(out) => out.concat(),
        Err(e) => return outcome(false, format!("TCP job failed: {e}")),
    };
    let cases = inproc_lines.lines().count();
    if tcp == inproc_lines {
        outcome(true, format!("{cases} rank-case results byte-identical over in-process and {p} TCP processes"))
    } else {
        let first = tcp.lines().zip(inproc_lines.lines()).position(|(a, b)| a != b);
        outcome(false, format!("TCP output differs from in-process (first differing line {first:?})"))
    }
}

fn rows_shuffled(op: Operator, spec: &WorkloadSpec) -> u64 {
    let inputs = inputs_for(spec).unwrap();
    run_job(op, &inputs, spec.parallelism, Split::Even).iter().map(|(_, m)| m.rows_shuffled).sum()
}

fn cardinality_crossover() -> Outcome {
    use bspframe::dist::GroupbyStrategy::{HashShuffle, MapRed};
    let (n, p) = (1_000_000, 4);
    let count = |strategy, c| {
        let op = Operator::Groupby(strategy);
        rows_shuffled(op, &WorkloadSpec::new(op, n, p, c, 3))
    };
    let (hash_low, mapred_low) = (count(HashShuffle, 1e-5), count(MapRed, 1e-5));
    let (hash_high, mapred_high) = (count(HashShuffle, 0.9), count(MapRed, 0.9));
    let a = (mapred_low as f64) <= 0.1 * hash_low as f64;
    let b = (mapred_high as f64) >= 0.9 * hash_high as f64;
    outcome(
        a && b,
        format!(
            "C=1e-5: mapred {mapred_low} vs hash {hash_low} rows; C=0.9: mapred {mapred_high} vs hash {hash_high} rows ({:.3})",
            mapred_high as f64 / hash_high as f64
        ),
    )
}

fn ep_zero_communication() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    for op in Operator::all().into_iter().filter(Operator::is_ep) {
        let spec = WorkloadSpec::new(op, 20_000, 1, 0.5, 9);
        let inputs = inputs_for(&spec).unwrap();
        for p in [1, 2, 3, 4, 8] {
            let sent: u64 = run_job(op, &inputs, p, Split::Random(p as u64))
                .iter()
                .map(|(_, m)| m.bytes_sent + m.messages_sent)
                .sum();
            checked += 1;
            if sent != 0 {
                bad.push(format!("{op} P={p}: {sent}"));
            }
        }
    }
    let detail = if bad.is_empty() {
        format!("{checked} EP runs at P in 1,2,3,4,8 sent no bytes")
    } else {
        format!("traffic in {}", bad.join(", "))
    };
    outcome(bad.is_empty(), detail)
}

/// Stable serial sort by (k ascending, v0 descending), written against
/// plain integer tuples.
fn sort_oracle(t: &Table) -> Vec<(i64, i64, i64)> {
    let (k, v0, v1) = (ints(t, 0), ints(t, 1), ints(t, 2));
    let mut rows: Vec<(i64, i64, i64)> = (0..t.len()).map(|i| (k[i], v0[i], v1[i])).collect();
    rows.sort_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)));
    rows
}

fn sort_global_order() -> Outcome {
    let p = 8;
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..4000);
        let c = [1.0 / n as f64, 0.01, 0.5, 1.0][seed as usize % 4].max(1.0 / n as f64);
        let spec = WorkloadSpec::new(Operator::Sort, n, p, c, seed);
        let inputs = inputs_for(&spec).unwrap();
        let parts: Vec<Table> =
            run_job(Operator::Sort, &inputs, p, Split::Random(seed ^ 0xabc)).into_iter().map(|(t, _)| t).collect();
        let key = |t: &Table, i: usize| (ints(t, 0)[i], std::cmp::Reverse(ints(t, 1)[i]));
        let nonempty: Vec<&Table> = parts.iter().filter(|t| !t.is_empty()).collect();
        let ordered = nonempty.windows(2).all(|w| key(w[0], w[0].len() - 1) <= key(w[1], 0));
        let got: Vec<(i64, i64, i64)> = parts
            .iter()
            .flat_map(|t| (0..t.len()).map(move |i| (ints(t, 0)[i], ints(t, 1)[i], ints(t, 2)[i])))
            .collect();
        if !ordered || got != sort_oracle(&inputs.a) {
            failures.push(seed);
        }
    }
    let detail = if failures.is_empty() {
        format!("100 seeds at P={p}: rank boundaries ordered and output equals the stable serial sort")
    } else {
        format!("failing seeds {failures:?}")
    };
    outcome(failures.is_empty(), detail)
}

fn rebalance_property() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let p = rng.gen_range(1..=8);
        let lens: Vec<usize> = (0..p)
            .map(|_| if rng.gen_bool(0.3) { 0 } else { rng.gen_range(0..500) })
            .collect();
        let total: usize = lens.iter().sum();
        let ids: Vec<i64> = (0..total as i64).collect();
        let starts: Vec<usize> = lens.iter().scan(0, |s, &l| { *s += l; Some(*s - l) }).collect();
        let out = inproc::run(p, |ctx: WorkerContext| {
            let r = ctx.rank();
            let mine = Table::from_columns(
                bspframe::Schema::from_pairs([("id", bspframe::Domain::Int64)]).unwrap(),
                vec![Column::Int64(ids[starts[r]..starts[r] + lens[r]].to_vec())],
            )
            .unwrap();
            let t = rebalance(&ctx, &mine, None).unwrap();
            // every rank agrees on the global length afterwards
            let n = ctx.comm().allreduce_array(&NumericArray::Int64(vec![t.len() as i64]), ReduceOp::Sum).unwrap();
            assert_eq!(n.as_i64().unwrap()[0] as usize, total);
            ints(&t, 0).to_vec()
        });
        let sizes: Vec<usize> = out.iter().map(Vec::len).collect();
        let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
        if spread > 1 || out.concat() != ids {
            failures.push((lens, sizes));
        }
    }
    let detail = if failures.is_empty() {
        "100 length vectors: lengths within 1 and global order preserved".to_string()
    } else {
        format!("failing (input, output) lengths {failures:?}")
    };
    outcome(failures.is_empty(), detail)
}

fn scaling_smoke() -> Outcome {
    let op = Operator::parse("join", Some("shuffle")).unwrap();
    let spec = WorkloadSpec::new(op, 10_000_000, 4, 0.9, 1);
    let report = match bench(&[spec], BenchConfig::default(), None) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("benchmark failed: {e}")),
    };
    let (Some(one), Some(four)) = (report.find("join", "shuffle", 1), report.find("join", "shuffle", 4)) else {
        return outcome(false, format!("missing rows: {report:?}"));
    };
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    outcome(
        four.t_total < one.t_total,
        format!(
            "N=1e7 join median t_total P=1 {:.3}s, P=4 {:.3}s on {cores} core(s)",
            one.t_total, four.t_total
        ),
    )
}

/// Name, check, and whether a failure fails the run.
type Criterion = (&'static str, fn() -> Outcome, bool);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 oracle equivalence", oracle_equivalence, true),
        ("2 transport conformance", transport_conformance, true),
        ("3 cardinality crossover", cardinality_crossover, true),
        ("4 EP zero communication", ep_zero_communication, true),
        ("5 sort global order", sort_global_order, true),
        ("6 rebalance", rebalance_property, true),
        ("7 strong-scaling smoke", scaling_smoke, false),
    ];
    let mut hard_failures = 0;
    for (name, check, hard) in criteria {
        let start = Instant::now();
        let o = check();
        let verdict = match (o.passed, hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (soft, not gating)",
        };
        hard_failures += usize::from(!o.passed && hard);
        println!("{verdict} criterion {name}: {} [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
    }
    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
