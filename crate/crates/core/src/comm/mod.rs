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

//! Bulk synchronous collectives over tables, numeric arrays and scalars.
//!
//! Every collective is built from a tagged, ordered, reliable point-to-point
//! [`Transport`]. All ranks must invoke the same collectives in the same
//! order. Each collective advances a superstep counter and stamps its frames
//! with `(tag, superstep)`; a receiver that sees a different stamp reports
//! [`Error::CollectiveMisuse`].
//!
//! Results that are computed at a root and replicated (allreduce, broadcast,
//! scatter) carry a status byte so that an error detected at the root reaches
//! every rank instead of leaving them blocked.

pub mod frame;
pub mod inproc;
pub mod metrics;
pub mod tcp;

use std::cell::{RefCell, RefMut};
use std::cmp::Ordering;
use std::fmt;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::table::wire::{deserialize_table, serialize_table};
use crate::table::{compare_f64, concat_tables, Schema, Table};
pub use frame::Frame;
pub use metrics::{Counters, OpMetrics};

/// Tagged, ordered, reliable byte-message delivery between ranks.
pub trait Transport: Send {
    fn rank(&self) -> usize;
    fn world_size(&self) -> usize;
    fn send(&mut self, dest: usize, frame: Frame) -> Result<()>;
    /// Blocks until the next frame from `source` arrives.
    fn recv(&mut self, source: usize) -> Result<Frame>;
}

/// Routine tags stamped on frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum RoutineTag {
    Shuffle = 1,
    Gather = 2,
    AllGather = 3,
    Broadcast = 4,
    Scatter = 5,
    AllReduce = 6,
    Barrier = 7,
    PointToPoint = 8,
    GatherArray = 9,
    AllGatherArray = 10,
    BroadcastArray = 11,
}

impl RoutineTag {
    fn from_u32(v: u32) -> Option<RoutineTag> {
        use RoutineTag::*;
        [
            Shuffle,
            Gather,
            AllGather,
            Broadcast,
            Scatter,
            AllReduce,
            Barrier,
            PointToPoint,
            GatherArray,
            AllGatherArray,
            BroadcastArray,
        ]
        .into_iter()
        .find(|t| *t as u32 == v)
    }
}

/// Element-wise reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReduceOp {
    Sum,
    Min,
    Max,
}

/// Homogeneous numeric array; the array/scalar payload of the collectives.
#[derive(Debug, Clone)]
pub enum NumericArray {
    Int64(Vec<i64>),
    Float64(Vec<f64>),
}

impl NumericArray {
    pub fn len(&self) -> usize {
        match self {
            NumericArray::Int64(v) => v.len(),
            NumericArray::Float64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn kind(&self) -> &'static str {
        match self {
            NumericArray::Int64(_) => "int64",
            NumericArray::Float64(_) => "float64",
        }
    }

    pub fn as_i64(&self) -> Option<&[i64]> {
        match self {
            NumericArray::Int64(v) => Some(v),
            NumericArray::Float64(_) => None,
        }
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match self {
            NumericArray::Float64(v) => Some(v),
            NumericArray::Int64(_) => None,
        }
    }

    /// `domain u8 (0 int64, 1 float64), count u64, values`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + 8 * self.len());
        match self {
            NumericArray::Int64(v) => {
                out.push(0);
                out.extend_from_slice(&(v.len() as u64).to_le_bytes());
                v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
            }
            NumericArray::Float64(v) => {
                out.push(1);
                out.extend_from_slice(&(v.len() as u64).to_le_bytes());
                v.iter()
                    .for_each(|x| out.extend_from_slice(&x.to_bits().to_le_bytes()));
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<NumericArray> {
        if bytes.len() < 9 {
            return Err(Error::CorruptPayload("array header truncated".into()));
        }
        let n = u64::from_le_bytes(bytes[1..9].try_into().unwrap()) as usize;
        let body = &bytes[9..];
        if n.checked_mul(8) != Some(body.len()) {
            return Err(Error::CorruptPayload(format!(
                "array of {n} elements has {} payload bytes",
                body.len()
            )));
        }
        let words = body
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()));
        match bytes[0] {
            0 => Ok(NumericArray::Int64(words.map(|w| w as i64).collect())),
            1 => Ok(NumericArray::Float64(words.map(f64::from_bits).collect())),
            t => Err(Error::CorruptPayload(format!("unknown array domain {t}"))),
        }
    }

    fn reduce_into(&mut self, other: &NumericArray, op: ReduceOp) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(format!(
                "allreduce arrays of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        match (self, other) {
            (NumericArray::Int64(a), NumericArray::Int64(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = match op {
                        ReduceOp::Sum => x.wrapping_add(*y),
                        ReduceOp::Min => (*x).min(*y),
                        ReduceOp::Max => (*x).max(*y),
                    };
                }
            }
            (NumericArray::Float64(a), NumericArray::Float64(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = match op {
                        ReduceOp::Sum => *x + *y,
                        ReduceOp::Min => {
                            if compare_f64(*y, *x) == Ordering::Less {
                                *y
                            } else {
                                *x
                            }
                        }
                        ReduceOp::Max => {
                            if compare_f64(*y, *x) == Ordering::Greater {
                                *y
                            } else {
                                *x
                            }
                        }
                    };
                }
            }
            (a, b) => {
                return Err(Error::DomainMismatch(format!(
                    "allreduce over {} and {} arrays",
                    a.kind(),
                    b.kind()
                )))
            }
        }
        Ok(())
    }
}

impl PartialEq for NumericArray {
    fn eq(&self, other: &Self) -> bool {
        self.encode() == other.encode()
    }
}

const STATUS_OK: u8 = 0;
const STATUS_ERR: u8 = 1;

fn encode_status(result: &std::result::Result<Vec<u8>, &Error>) -> Vec<u8> {
    match result {
        Ok(body) => {
            let mut out = Vec::with_capacity(body.len() + 1);
            out.push(STATUS_OK);
            out.extend_from_slice(body);
            out
        }
        Err(e) => {
            let code = match e {
                Error::LengthMismatch(_) => 1,
                Error::SchemaMismatch(_) => 2,
                Error::MissingInput(_) => 3,
                Error::DomainMismatch(_) => 4,
                Error::Usage(_) => 5,
                _ => 0,
            };
            let mut out = vec![STATUS_ERR, code];
            let msg = match e {
                Error::MissingInput(root) => root.to_string(),
                Error::LengthMismatch(m)
                | Error::SchemaMismatch(m)
                | Error::DomainMismatch(m)
                | Error::Usage(m) => m.clone(),
                other => other.to_string(),
            };
            out.extend_from_slice(msg.as_bytes());
            out
        }
    }
}

fn decode_status(mut payload: Vec<u8>) -> Result<Vec<u8>> {
    match payload.first() {
        Some(&STATUS_OK) => {
            payload.remove(0);
            Ok(payload)
        }
        Some(&STATUS_ERR) if payload.len() >= 2 => {
            let msg = String::from_utf8_lossy(&payload[2..]).into_owned();
            Err(match payload[1] {
                1 => Error::LengthMismatch(msg),
                2 => Error::SchemaMismatch(msg),
                3 => Error::MissingInput(msg.parse().unwrap_or(0)),
                4 => Error::DomainMismatch(msg),
                5 => Error::Usage(msg),
                _ => Error::Remote(msg),
            })
        }
        _ => Err(Error::CorruptPayload("missing status byte".into())),
    }
}

/// One rank's endpoint of a job.
pub struct Communicator {
    transport: Box<dyn Transport>,
    rank: usize,
    world_size: usize,
    superstep: u64,
    counters: Counters,
}

impl fmt::Debug for Communicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Communicator")
            .field("rank", &self.rank)
            .field("world_size", &self.world_size)
            .field("superstep", &self.superstep)
            .finish()
    }
}

impl Communicator {
    pub fn new(transport: Box<dyn Transport>) -> Communicator {
        let rank = transport.rank();
        let world_size = transport.world_size();
        Communicator {
            transport,
            rank,
            world_size,
            superstep: 0,
            counters: Counters::default(),
        }
    }

    /// A single-rank communicator; every collective is a local identity.
    pub fn single() -> Communicator {
        let t = inproc::InProcTransport::mesh(1).pop().unwrap();
        Communicator::new(Box::new(t))
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn world_size(&self) -> usize {
        self.world_size
    }

    /// Number of collectives completed or in progress on this rank.
    pub fn superstep(&self) -> u64 {
        self.superstep
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    fn peers(&self) -> Vec<usize> {
        (0..self.world_size).filter(|&d| d != self.rank).collect()
    }

    fn begin(&mut self) -> u64 {
        self.superstep += 1;
        self.superstep
    }

    fn check_rank(&self, r: usize, what: &str) -> Result<()> {
        if r >= self.world_size {
            return Err(Error::Usage(format!(
                "{what} rank {r} outside world of size {}",
                self.world_size
            )));
        }
        Ok(())
    }

    fn send_frame(&mut self, dest: usize, tag: RoutineTag, step: u64, payload: Vec<u8>) -> Result<()> {
        let frame = Frame {
            tag: tag as u32,
            superstep: step,
            payload,
        };
        self.counters.bytes_sent += frame.wire_len() as u64;
        self.counters.messages_sent += 1;
        self.transport.send(dest, frame)
    }

    fn recv_frame(&mut self, source: usize, tag: RoutineTag, step: u64) -> Result<Vec<u8>> {
        let frame = self.transport.recv(source)?;
        self.counters.bytes_received += frame.wire_len() as u64;
        if frame.tag != tag as u32 || frame.superstep != step {
            let got = RoutineTag::from_u32(frame.tag)
                .map_or_else(|| format!("tag {}", frame.tag), |t| format!("{t:?}"));
            return Err(Error::CollectiveMisuse(format!(
                "rank {} expected {:?}@{} from rank {}, got {}@{}",
                self.rank, tag, step, source, got, frame.superstep
            )));
        }
        Ok(frame.payload)
    }

    fn send_table_bytes(
        &mut self,
        dest: usize,
        tag: RoutineTag,
        step: u64,
        bytes: Vec<u8>,
        rows: usize,
    ) -> Result<()> {
        self.counters.rows_shuffled += rows as u64;
        self.counters.table_bytes_sent += bytes.len() as u64;
        self.send_frame(dest, tag, step, bytes)
    }

    fn recv_table_frame(&mut self, source: usize, tag: RoutineTag, step: u64) -> Result<Table> {
        let bytes = self.recv_frame(source, tag, step)?;
        deserialize_table(&bytes)
    }

    fn check_schema(&self, expected: &Schema, got: &Table, source: usize) -> Result<()> {
        if got.schema() != expected {
            return Err(Error::SchemaMismatch(format!(
                "rank {} has schema {} but rank {source} sent {}",
                self.rank,
                expected,
                got.schema()
            )));
        }
        Ok(())
    }

    /// All-to-all: `parts[d]` goes to rank `d`. Returns what each source sent
    /// to this rank, indexed by source rank.
    pub fn shuffle_tables(&mut self, parts: Vec<Table>) -> Result<Vec<Table>> {
        if parts.len() != self.world_size {
            return Err(Error::Usage(format!(
                "shuffle needs {} parts, got {}",
                self.world_size,
                parts.len()
            )));
        }
        let schema = parts[0].schema_ref().clone();
        if let Some(p) = parts.iter().find(|p| p.schema() != schema.as_ref()) {
            return Err(Error::SchemaMismatch(format!(
                "shuffle parts disagree: {} vs {}",
                schema,
                p.schema()
            )));
        }
        let step = self.begin();
        let mut own = None;
        for (dest, part) in parts.into_iter().enumerate() {
            if dest == self.rank {
                own = Some(part);
            } else {
                let rows = part.len();
                self.send_table_bytes(dest, RoutineTag::Shuffle, step, serialize_table(&part), rows)?;
            }
        }
        let mut received = Vec::with_capacity(self.world_size);
        for src in 0..self.world_size {
            let t = if src == self.rank {
                own.take().expect("own part")
            } else {
                self.recv_table_frame(src, RoutineTag::Shuffle, step)?
            };
            self.check_schema(&schema, &t, src)?;
            received.push(t);
        }
        Ok(received)
    }

    /// All-to-all returning the received sub-tables concatenated in ascending
    /// source-rank order.
    pub fn shuffle_table(&mut self, parts: Vec<Table>) -> Result<Table> {
        let schema = parts
            .first()
            .map(|p| p.schema_ref().clone())
            .ok_or_else(|| Error::Usage("shuffle needs at least one part".into()))?;
        let received = self.shuffle_tables(parts)?;
        concat_tables(&schema, &received)
    }

    /// Root receives every rank's table in rank order; other ranks get `None`.
    pub fn gather_table(&mut self, table: &Table, root: usize) -> Result<Option<Vec<Table>>> {
        self.check_rank(root, "gather root")?;
        let step = self.begin();
        if self.rank != root {
            self.send_table_bytes(root, RoutineTag::Gather, step, serialize_table(table), table.len())?;
            return Ok(None);
        }
        let mut out = Vec::with_capacity(self.world_size);
        for src in 0..self.world_size {
            let t = if src == root {
                table.clone()
            } else {
                self.recv_table_frame(src, RoutineTag::Gather, step)?
            };
            self.check_schema(table.schema(), &t, src)?;
            out.push(t);
        }
        Ok(Some(out))
    }

    /// Every rank receives every rank's table, in rank order.
    pub fn allgather_table(&mut self, table: &Table) -> Result<Vec<Table>> {
        let step = self.begin();
        if self.world_size > 1 {
            let bytes = serialize_table(table);
            for dest in self.peers() {
                self.send_table_bytes(dest, RoutineTag::AllGather, step, bytes.clone(), table.len())?;
            }
        }
        let mut out = Vec::with_capacity(self.world_size);
        for src in 0..self.world_size {
            let t = if src == self.rank {
                table.clone()
            } else {
                self.recv_table_frame(src, RoutineTag::AllGather, step)?
            };
            self.check_schema(table.schema(), &t, src)?;
            out.push(t);
        }
        Ok(out)
    }

    /// Replicates the root's table. Non-root ranks pass `None`.
    pub fn broadcast_table(&mut self, table: Option<&Table>, root: usize) -> Result<Table> {
        self.check_rank(root, "broadcast root")?;
        let step = self.begin();
        if self.rank == root {
            let missing = Error::MissingInput(root);
            let body = match table {
                Some(t) => Ok(serialize_table(t)),
                None => Err(&missing),
            };
            let payload = encode_status(&body);
            let rows = table.map_or(0, Table::len);
            for dest in (0..self.world_size).filter(|&d| d != root) {
                self.send_table_bytes(dest, RoutineTag::Broadcast, step, payload.clone(), rows)?;
            }
            return match table {
                Some(t) => Ok(t.clone()),
                None => Err(missing),
            };
        }
        let payload = self.recv_frame(root, RoutineTag::Broadcast, step)?;
        deserialize_table(&decode_status(payload)?)
    }

    /// Rank `i` receives `parts[i]` from the root. Non-root ranks pass `None`.
    pub fn scatter_table(&mut self, parts: Option<&[Table]>, root: usize) -> Result<Table> {
        self.check_rank(root, "scatter root")?;
        let step = self.begin();
        if self.rank == root {
            let checked: Result<&[Table]> = match parts {
                None => Err(Error::MissingInput(root)),
                Some(p) if p.len() != self.world_size => Err(Error::Usage(format!(
                    "scatter needs {} parts, got {}",
                    self.world_size,
                    p.len()
                ))),
                Some(p) => match p.iter().find(|t| t.schema() != p[0].schema()) {
                    Some(t) => Err(Error::SchemaMismatch(format!(
                        "scatter parts disagree: {} vs {}",
                        p[0].schema(),
                        t.schema()
                    ))),
                    None => Ok(p),
                },
            };
            for dest in (0..self.world_size).filter(|&d| d != root) {
                let (payload, rows) = match &checked {
                    Ok(p) => (encode_status(&Ok(serialize_table(&p[dest]))), p[dest].len()),
                    Err(e) => (encode_status(&Err(e)), 0),
                };
                self.send_table_bytes(dest, RoutineTag::Scatter, step, payload, rows)?;
            }
            return checked.map(|p| p[root].clone());
        }
        let payload = self.recv_frame(root, RoutineTag::Scatter, step)?;
        deserialize_table(&decode_status(payload)?)
    }

    /// Element-wise reduction replicated on every rank. Arrays are gathered at
    /// rank 0 and folded in rank order, so Float64 sums are bit-identical
    /// everywhere.
    pub fn allreduce_array(&mut self, values: &NumericArray, op: ReduceOp) -> Result<NumericArray> {
        let step = self.begin();
        const ROOT: usize = 0;
        if self.rank != ROOT {
            self.send_frame(ROOT, RoutineTag::AllReduce, step, values.encode())?;
            let payload = self.recv_frame(ROOT, RoutineTag::AllReduce, step)?;
            return NumericArray::decode(&decode_status(payload)?);
        }
        let mut inputs = Vec::with_capacity(self.world_size);
        inputs.push(values.clone());
        let mut first_err = None;
        for src in 1..self.world_size {
            match self
                .recv_frame(src, RoutineTag::AllReduce, step)
                .and_then(|p| NumericArray::decode(&p))
            {
                Ok(a) => inputs.push(a),
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        let result = match first_err {
            Some(e) => Err(e),
            None => {
                let mut acc = inputs[0].clone();
                inputs[1..]
                    .iter()
                    .try_for_each(|a| acc.reduce_into(a, op))
                    .map(|_| acc)
            }
        };
        let payload = encode_status(&result.as_ref().map(NumericArray::encode));
        for dest in 1..self.world_size {
            self.send_frame(dest, RoutineTag::AllReduce, step, payload.clone())?;
        }
        result
    }

    pub fn allreduce_i64(&mut self, value: i64, op: ReduceOp) -> Result<i64> {
        let r = self.allreduce_array(&NumericArray::Int64(vec![value]), op)?;
        r.as_i64()
            .map(|v| v[0])
            .ok_or_else(|| Error::CorruptPayload("allreduce changed domain".into()))
    }

    pub fn allreduce_f64(&mut self, value: f64, op: ReduceOp) -> Result<f64> {
        let r = self.allreduce_array(&NumericArray::Float64(vec![value]), op)?;
        r.as_f64()
            .map(|v| v[0])
            .ok_or_else(|| Error::CorruptPayload("allreduce changed domain".into()))
    }

    /// Every rank receives every rank's array, in rank order.
    pub fn allgather_array(&mut self, values: &NumericArray) -> Result<Vec<NumericArray>> {
        let step = self.begin();
        let bytes = values.encode();
        for dest in self.peers() {
            self.send_frame(dest, RoutineTag::AllGatherArray, step, bytes.clone())?;
        }
        let mut out = Vec::with_capacity(self.world_size);
        for src in 0..self.world_size {
            if src == self.rank {
                out.push(values.clone());
            } else {
                let p = self.recv_frame(src, RoutineTag::AllGatherArray, step)?;
                out.push(NumericArray::decode(&p)?);
            }
        }
        Ok(out)
    }

    /// Root receives every rank's array in rank order.
    pub fn gather_array(&mut self, values: &NumericArray, root: usize) -> Result<Option<Vec<NumericArray>>> {
        self.check_rank(root, "gather root")?;
        let step = self.begin();
        if self.rank != root {
            self.send_frame(root, RoutineTag::GatherArray, step, values.encode())?;
            return Ok(None);
        }
        let mut out = Vec::with_capacity(self.world_size);
        for src in 0..self.world_size {
            if src == root {
                out.push(values.clone());
            } else {
                let p = self.recv_frame(src, RoutineTag::GatherArray, step)?;
                out.push(NumericArray::decode(&p)?);
            }
        }
        Ok(Some(out))
    }

    pub fn broadcast_array(&mut self, values: Option<&NumericArray>, root: usize) -> Result<NumericArray> {
        self.check_rank(root, "broadcast root")?;
        let step = self.begin();
        if self.rank == root {
            let missing = Error::MissingInput(root);
            let payload = encode_status(&values.map(NumericArray::encode).ok_or(&missing));
            for dest in (0..self.world_size).filter(|&d| d != root) {
                self.send_frame(dest, RoutineTag::BroadcastArray, step, payload.clone())?;
            }
            return values.cloned().ok_or(missing);
        }
        let payload = self.recv_frame(root, RoutineTag::BroadcastArray, step)?;
        NumericArray::decode(&decode_status(payload)?)
    }

    /// Point-to-point send, stamped with the current superstep. Pairs must be
    /// schedulable: with buffered transports any order works, but portable code
    /// should alternate send/recv by rank parity.
    pub fn send_table(&mut self, table: &Table, dest: usize) -> Result<()> {
        self.check_rank(dest, "destination")?;
        if dest == self.rank {
            return Err(Error::Usage(format!("rank {dest} cannot send to itself")));
        }
        let step = self.superstep;
        self.send_table_bytes(dest, RoutineTag::PointToPoint, step, serialize_table(table), table.len())
    }

    pub fn recv_table(&mut self, source: usize) -> Result<Table> {
        self.check_rank(source, "source")?;
        if source == self.rank {
            return Err(Error::Usage(format!("rank {source} cannot receive from itself")));
        }
        let step = self.superstep;
        self.recv_table_frame(source, RoutineTag::PointToPoint, step)
    }

    /// Returns once every rank has entered the barrier.
    pub fn barrier(&mut self) -> Result<()> {
        let step = self.begin();
        if self.rank == 0 {
            for src in 1..self.world_size {
                self.recv_frame(src, RoutineTag::Barrier, step)?;
            }
            for dest in 1..self.world_size {
                self.send_frame(dest, RoutineTag::Barrier, step, Vec::new())?;
            }
        } else {
            self.send_frame(0, RoutineTag::Barrier, step, Vec::new())?;
            self.recv_frame(0, RoutineTag::Barrier, step)?;
        }
        Ok(())
    }
}

/// Handle to one worker's communicator, shared by the distributed tables
/// living on that worker. Confined to the worker's thread.
#[derive(Clone)]
pub struct WorkerContext {
    comm: Rc<RefCell<Communicator>>,
    last_metrics: Rc<RefCell<OpMetrics>>,
}

impl fmt::Debug for WorkerContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("WorkerContext").field(&self.comm.borrow()).finish()
    }
}

impl WorkerContext {
    pub fn new(comm: Communicator) -> WorkerContext {
        WorkerContext {
            comm: Rc::new(RefCell::new(comm)),
            last_metrics: Rc::default(),
        }
    }

    /// Single-rank context, handy for serial use of the distributed API.
    pub fn single() -> WorkerContext {
        WorkerContext::new(Communicator::single())
    }

    pub fn rank(&self) -> usize {
        self.comm.borrow().rank()
    }

    pub fn world_size(&self) -> usize {
        self.comm.borrow().world_size()
    }

    /// Mutable access to the communicator for direct collective calls.
    pub fn comm(&self) -> RefMut<'_, Communicator> {
        self.comm.borrow_mut()
    }

    /// Metrics of the most recent distributed operator run on this worker.
    pub fn last_metrics(&self) -> OpMetrics {
        self.last_metrics.borrow().clone()
    }

    pub(crate) fn set_last_metrics(&self, m: OpMetrics) {
        *self.last_metrics.borrow_mut() = m;
    }

    pub fn same_worker(&self, other: &WorkerContext) -> bool {
        Rc::ptr_eq(&self.comm, &other.comm)
    }
}
