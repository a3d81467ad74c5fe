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

//! A fixed script over every collective whose results are recorded as
//! bytes, so two transports can be compared for identical output.

use std::fmt::Write as _;

use bspframe::table::wire::serialize_table;
use bspframe::{Column, Domain, Error, NumericArray, ReduceOp, Result, Schema, Table, WorkerContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One recorded step: its name and the bytes it produced on this rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Deterministic mixed-domain table for `rank` with NaN, -0.0 and empty
/// strings among the values.
pub fn rank_table(rows: usize, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ints = (0..rows).map(|_| rng.gen_range(-50..50)).collect();
    let floats = (0..rows)
        .map(|i| match i % 7 {
            3 => f64::NAN,
            5 => -0.0,
            _ => rng.gen_range(-1e3..1e3),
        })
        .collect();
    let strings = (0..rows)
        .map(|i| if i % 5 == 0 { String::new() } else { format!("s{}", rng.gen_range(0..1000)) })
        .collect();
    let schema = Schema::from_pairs([("k", Domain::Int64), ("f", Domain::Float64), ("s", Domain::Utf8)])
        .expect("valid schema");
    Table::from_columns(schema, vec![Column::Int64(ints), Column::Float64(floats), Column::Utf8(strings)])
        .expect("valid table")
}

fn split_by_key(t: &Table, parts: usize) -> Result<Vec<Table>> {
    let Column::Int64(keys) = t.column(0) else { unreachable!() };
    (0..parts)
        .map(|p| {
            let idx: Vec<usize> =
                (0..keys.len()).filter(|&i| keys[i].rem_euclid(parts as i64) as usize == p).collect();
            t.take_rows(&idx)
        })
        .collect()
}

fn error_name(r: Result<impl Sized>) -> Vec<u8> {
    match r {
        Ok(_) => b"ok".to_vec(),
        Err(e) => {
            let name = match e {
                Error::LengthMismatch(_) => "LengthMismatch",
                Error::SchemaMismatch(_) => "SchemaMismatch",
                Error::DomainMismatch(_) => "DomainMismatch",
                Error::Remote(_) => "Remote",
                _ => "Other",
            };
            name.as_bytes().to_vec()
        }
    }
}

/// Collective: runs the script on this rank.
pub fn run_script(ctx: &WorkerContext) -> Result<Vec<Case>> {
    let rank = ctx.rank();
    let p = ctx.world_size();
    let mine = rank_table(40 + 9 * rank, 1000 + rank as u64);
    let mut cases = Vec::new();
    let mut push = |name: &str, bytes: Vec<u8>| cases.push(Case { name: name.into(), bytes });
    let mut comm = ctx.comm();

    let per_dest = comm.shuffle_tables(split_by_key(&mine, p)?)?;
    for (src, t) in per_dest.iter().enumerate() {
        push(&format!("shuffle_tables/{src}"), serialize_table(t));
    }
    push("shuffle_table", serialize_table(&comm.shuffle_table(split_by_key(&mine, p)?)?));
    for (src, t) in comm.allgather_table(&mine)?.iter().enumerate() {
        push(&format!("allgather_table/{src}"), serialize_table(t));
    }
    let root = p - 1;
    match comm.gather_table(&mine, root)? {
        Some(all) => {
            for (src, t) in all.iter().enumerate() {
                push(&format!("gather_table/{src}"), serialize_table(t));
            }
        }
        None => push("gather_table", Vec::new()),
    }
    let shared = rank_table(12, 7);
    let b = comm.broadcast_table((rank == root).then_some(&shared), root)?;
    push("broadcast_table", serialize_table(&b));
    let pieces = split_by_key(&shared, p)?;
    let s = comm.scatter_table((rank == 0).then_some(pieces.as_slice()), 0)?;
    push("scatter_table", serialize_table(&s));

    let ints = NumericArray::Int64(vec![rank as i64, -(rank as i64) * 3, i64::MAX - rank as i64, 0]);
    let floats = NumericArray::Float64(vec![rank as f64 * 0.25, -0.0, if rank.is_multiple_of(2) { f64::NAN } else { 1.0 }]);
    for (op, name) in [(ReduceOp::Sum, "sum"), (ReduceOp::Min, "min"), (ReduceOp::Max, "max")] {
        let i = match op {
            // Sums of near-max values overflow, so sum the small entries only.
            ReduceOp::Sum => NumericArray::Int64(vec![rank as i64, -(rank as i64) * 3]),
            _ => ints.clone(),
        };
        push(&format!("allreduce_int_{name}"), comm.allreduce_array(&i, op)?.encode());
        push(&format!("allreduce_float_{name}"), comm.allreduce_array(&floats, op)?.encode());
    }
    for (src, a) in comm.allgather_array(&ints)?.iter().enumerate() {
        push(&format!("allgather_array/{src}"), a.encode());
    }
    match comm.gather_array(&floats, 0)? {
        Some(all) => push("gather_array", all.iter().flat_map(|a| a.encode()).collect()),
        None => push("gather_array", Vec::new()),
    }
    let bcast = comm.broadcast_array((rank == 0).then_some(&ints), 0)?;
    push("broadcast_array", bcast.encode());
    comm.barrier()?;
    push("barrier", Vec::new());
    if p > 1 {
        comm.send_table(&mine, (rank + 1) % p)?;
        let got = comm.recv_table((rank + p - 1) % p)?;
        push("send_recv", serialize_table(&got));
    }
    comm.barrier()?;

    // Error cases come last: a rank-dependent array length and a schema
    // that differs on the last rank.
    let len = if rank == p - 1 { 3 } else { 2 };
    let bad = NumericArray::Int64(vec![1; len]);
    push("allreduce_length_mismatch", error_name(comm.allreduce_array(&bad, ReduceOp::Sum)));
    Ok(cases)
}

/// `name<TAB>hex` lines, one per case.
pub fn render(cases: &[Case]) -> String {
    let mut out = String::new();
    for c in cases {
        let _ = write!(out, "{}\t", c.name);
        for b in &c.bytes {
            let _ = write!(out, "{b:02x}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use bspframe::comm::inproc;

    #[test]
    fn script_is_deterministic_and_reports_errors() {
        for p in [1, 3] {
            let a = inproc::run(p, |ctx| run_script(&ctx).unwrap());
            let b = inproc::run(p, |ctx| run_script(&ctx).unwrap());
            assert_eq!(a, b);
            for cases in &a {
                let last = cases.last().unwrap();
                let expect: &[u8] = if p == 1 { b"ok" } else { b"LengthMismatch" };
                assert_eq!(last.bytes, expect);
            }
        }
    }

    #[test]
    fn render_is_hex() {
        let text = render(&[Case { name: "x".into(), bytes: vec![0, 255] }]);
        assert_eq!(text, "x\t00ff\n");
    }
}
