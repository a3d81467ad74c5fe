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

//! Collectives over the in-process and TCP transports.

mod common;

use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use bspframe::comm::inproc;
use bspframe::comm::tcp::{JobFile, TcpTransport};
use bspframe::table::wire::serialize_table;
use bspframe::{Communicator, Error, NumericArray, ReduceOp, Table, WorkerContext};
use common::*;

/// Runs a fixed sequence of collectives and records every result as bytes.
fn script(ctx: WorkerContext) -> Vec<Vec<u8>> {
    let rank = ctx.rank();
    let p = ctx.world_size();
    let mut comm = ctx.comm();
    let mine = random_table(50 + rank * 7, 10, rank as u64);
    let mut out = Vec::new();
    let parts = split(&mine, p, 3);
    out.push(serialize_table(&comm.shuffle_table(parts).unwrap()));
    for t in comm.allgather_table(&mine).unwrap() {
        out.push(serialize_table(&t));
    }
    if let Some(all) = comm.gather_table(&mine, p - 1).unwrap() {
        out.extend(all.iter().map(serialize_table));
    }
    let root_table = random_table(5, 2, 99);
    let b = comm.broadcast_table((rank == 1 % p).then_some(&root_table), 1 % p).unwrap();
    out.push(serialize_table(&b));
    let pieces = split(&root_table, p, 4);
    let s = comm.scatter_table((rank == 0).then_some(pieces.as_slice()), 0).unwrap();
    out.push(serialize_table(&s));
    let ints = NumericArray::Int64(vec![rank as i64, -(rank as i64), 7]);
    let floats = NumericArray::Float64(vec![rank as f64 * 0.5, f64::NAN]);
    for op in [ReduceOp::Sum, ReduceOp::Min, ReduceOp::Max] {
        out.push(comm.allreduce_array(&ints, op).unwrap().encode());
        out.push(comm.allreduce_array(&floats, op).unwrap().encode());
    }
    comm.barrier().unwrap();
    if p > 1 {
        let next = (rank + 1) % p;
        let prev = (rank + p - 1) % p;
        comm.send_table(&mine, next).unwrap();
        out.push(serialize_table(&comm.recv_table(prev).unwrap()));
    }
    out
}

fn tcp_run<R: Send>(p: usize, f: impl Fn(WorkerContext) -> R + Sync) -> Vec<R> {
    let listeners: Vec<TcpListener> = (0..p).map(|_| TcpListener::bind("127.0.0.1:0").unwrap()).collect();
    let job = JobFile::from_addresses(
        listeners
            .iter()
            .map(|l| ("127.0.0.1".to_string(), l.local_addr().unwrap().port()))
            .collect(),
    );
    let f = &f;
    let job = &job;
    thread::scope(|s| {
        let handles: Vec<_> = listeners
            .into_iter()
            .enumerate()
            .map(|(rank, l)| {
                s.spawn(move || {
                    let t = TcpTransport::connect_with_listener(rank, job, l, Duration::from_secs(20)).unwrap();
                    f(WorkerContext::new(Communicator::new(Box::new(t))))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

#[test]
fn tcp_and_inproc_agree_byte_for_byte() {
    for p in [1, 2, 4] {
        assert_eq!(inproc::run(p, script), tcp_run(p, script), "P={p}");
    }
}

#[test]
fn reduce_errors_reach_every_rank() {
    for run in [inproc::run::<bool, _> as fn(_, _) -> _, tcp_run] {
        let out = run(3, |ctx: WorkerContext| {
            let len = if ctx.rank() == 2 { 3 } else { 2 };
            let r = ctx.comm().allreduce_array(&NumericArray::Int64(vec![1; len]), ReduceOp::Sum);
            matches!(r, Err(Error::LengthMismatch(_)))
        });
        assert_eq!(out, vec![true; 3]);
    }
}

#[test]
fn mismatched_collectives_are_detected() {
    let out = inproc::run(2, |ctx| {
        let rank = ctx.rank();
        let mut comm = ctx.comm();
        if rank == 0 {
            comm.barrier().err()
        } else {
            let t = Table::empty(random_table(0, 1, 0).schema_ref().clone());
            comm.allgather_table(&t).err()
        }
    });
    assert!(out.iter().any(|e| matches!(e, Some(Error::CollectiveMisuse(_)))));
}

#[test]
fn shuffle_schema_mismatch_is_reported() {
    let out = inproc::run(2, |ctx| {
        let t = if ctx.rank() == 0 {
            random_table(3, 1, 0)
        } else {
            random_table(3, 1, 0).project(&["k"]).unwrap()
        };
        let parts = split(&t, 2, 0);
        matches!(ctx.comm().shuffle_table(parts), Err(Error::SchemaMismatch(_)))
    });
    assert_eq!(out, vec![true, true]);
}
