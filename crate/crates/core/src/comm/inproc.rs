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

//! In-process transport: P workers in one process, one FIFO channel per
//! ordered rank pair.

use std::sync::mpsc::{channel, Receiver, Sender};
use std::thread;

use super::frame::Frame;
use super::{Communicator, Transport, WorkerContext};
use crate::error::{Error, Result};

pub struct InProcTransport {
    rank: usize,
    world_size: usize,
    senders: Vec<Option<Sender<Frame>>>,
    receivers: Vec<Option<Receiver<Frame>>>,
}

impl InProcTransport {
    /// Creates a fully connected set of `world_size` endpoints, indexed by rank.
    pub fn mesh(world_size: usize) -> Vec<InProcTransport> {
        assert!(world_size >= 1, "world size must be at least 1");
        let mut senders: Vec<Vec<Option<Sender<Frame>>>> =
            (0..world_size).map(|_| (0..world_size).map(|_| None).collect()).collect();
        let mut receivers: Vec<Vec<Option<Receiver<Frame>>>> =
            (0..world_size).map(|_| (0..world_size).map(|_| None).collect()).collect();
        for src in 0..world_size {
            for dst in 0..world_size {
                if src != dst {
                    let (tx, rx) = channel();
                    senders[src][dst] = Some(tx);
                    receivers[dst][src] = Some(rx);
                }
            }
        }
        senders
            .into_iter()
            .zip(receivers)
            .enumerate()
            .map(|(rank, (senders, receivers))| InProcTransport {
                rank,
                world_size,
                senders,
                receivers,
            })
            .collect()
    }
}

impl Transport for InProcTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn world_size(&self) -> usize {
        self.world_size
    }

    fn send(&mut self, dest: usize, frame: Frame) -> Result<()> {
        let tx = self
            .senders
            .get(dest)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Usage(format!("rank {} cannot send to {dest}", self.rank)))?;
        tx.send(frame)
            .map_err(|_| Error::Transport(format!("rank {dest} has shut down")))
    }

    fn recv(&mut self, source: usize) -> Result<Frame> {
        let rx = self
            .receivers
            .get(source)
            .and_then(Option::as_ref)
            .ok_or_else(|| {
                Error::Usage(format!("rank {} cannot receive from {source}", self.rank))
            })?;
        rx.recv()
            .map_err(|_| Error::Transport(format!("rank {source} has shut down")))
    }
}

/// Runs `f` on `world_size` worker threads, each with its own context, and
/// returns the results indexed by rank.
pub fn run<R, F>(world_size: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(WorkerContext) -> R + Sync,
{
    let transports = InProcTransport::mesh(world_size);
    let f = &f;
    thread::scope(|s| {
        let handles: Vec<_> = transports
            .into_iter()
            .map(|t| {
                thread::Builder::new()
                    .name(format!("worker-{}", t.rank))
                    .spawn_scoped(s, move || f(WorkerContext::new(Communicator::new(Box::new(t)))))
                    .expect("spawn worker thread")
            })
            .collect();
        handles
            .into_iter()
            .map(|h| match h.join() {
                Ok(r) => r,
                Err(p) => std::panic::resume_unwind(p),
            })
            .collect()
    })
}
