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

//! TCP transport: one process per rank, full mesh of connections set up from
//! a job file.
//!
//! Rank `r` listens on its own address, connects to every lower rank and
//! accepts connections from every higher rank. Each connection starts with a
//! handshake (`"BSPH"`, rank u32, world size u32) and then carries frames.
//! A reader thread per peer drains incoming frames into a queue, so sends
//! never wait on the peer's application code.

use std::fs;
use std::io::{Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::mpsc::{channel, Receiver};
use std::thread;
use std::time::{Duration, Instant};

use super::frame::{read_frame, write_frame, Frame};
use super::Transport;
use crate::error::{Error, Result};

const HANDSHAKE_MAGIC: [u8; 4] = *b"BSPH";

/// Rank-to-address table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobFile {
    hosts: Vec<(String, u16)>,
}

impl JobFile {
    /// Parses `rank host port` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<JobFile> {
        let mut entries: Vec<(usize, String, u16)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::InvalidSpec(format!("job file line {}: `{line}`", lineno + 1));
            if parts.len() != 3 {
                return Err(bad());
            }
            let rank = parts[0].parse::<usize>().map_err(|_| bad())?;
            let port = parts[2].parse::<u16>().map_err(|_| bad())?;
            entries.push((rank, parts[1].to_string(), port));
        }
        entries.sort_by_key(|e| e.0);
        for (i, e) in entries.iter().enumerate() {
            if e.0 != i {
                return Err(Error::InvalidSpec(format!(
                    "job file ranks must be distinct and cover 0..{}",
                    entries.len()
                )));
            }
        }
        if entries.is_empty() {
            return Err(Error::InvalidSpec("job file lists no ranks".into()));
        }
        Ok(JobFile {
            hosts: entries.into_iter().map(|(_, h, p)| (h, p)).collect(),
        })
    }

    pub fn load(path: &Path) -> Result<JobFile> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => e.into(),
        })?;
        JobFile::parse(&text)
    }

    pub fn from_addresses(hosts: Vec<(String, u16)>) -> JobFile {
        JobFile { hosts }
    }

    pub fn world_size(&self) -> usize {
        self.hosts.len()
    }

    pub fn address(&self, rank: usize) -> &(String, u16) {
        &self.hosts[rank]
    }

    pub fn render(&self) -> String {
        self.hosts
            .iter()
            .enumerate()
            .map(|(r, (h, p))| format!("{r} {h} {p}\n"))
            .collect()
    }
}

pub struct TcpTransport {
    rank: usize,
    world_size: usize,
    writers: Vec<Option<TcpStream>>,
    receivers: Vec<Option<Receiver<Result<Frame>>>>,
}

fn handshake(rank: usize, world: usize) -> [u8; 12] {
    let mut h = [0u8; 12];
    h[0..4].copy_from_slice(&HANDSHAKE_MAGIC);
    h[4..8].copy_from_slice(&(rank as u32).to_le_bytes());
    h[8..12].copy_from_slice(&(world as u32).to_le_bytes());
    h
}

impl TcpTransport {
    /// Binds this rank's address and connects the full mesh, retrying
    /// connections until `timeout` elapses.
    pub fn connect(rank: usize, job: &JobFile, timeout: Duration) -> Result<TcpTransport> {
        let world = job.world_size();
        if rank >= world {
            return Err(Error::InvalidSpec(format!(
                "rank {rank} not in job of size {world}"
            )));
        }
        let (host, port) = job.address(rank);
        let listener = TcpListener::bind((host.as_str(), *port))
            .map_err(|e| Error::Transport(format!("bind {host}:{port}: {e}")))?;
        TcpTransport::connect_with_listener(rank, job, listener, timeout)
    }

    /// As [`TcpTransport::connect`] with an already bound listener.
    pub fn connect_with_listener(
        rank: usize,
        job: &JobFile,
        listener: TcpListener,
        timeout: Duration,
    ) -> Result<TcpTransport> {
        let world = job.world_size();
        let deadline = Instant::now() + timeout;
        let mut streams: Vec<Option<TcpStream>> = (0..world).map(|_| None).collect();

        for (peer, slot) in streams.iter_mut().enumerate().take(rank) {
            let (host, port) = job.address(peer);
            let addrs: Vec<_> = (host.as_str(), *port)
                .to_socket_addrs()
                .map_err(|e| Error::Transport(format!("resolve {host}:{port}: {e}")))?
                .collect();
            let mut stream = loop {
                match addrs.iter().find_map(|a| TcpStream::connect(a).ok()) {
                    Some(s) => break s,
                    None if Instant::now() < deadline => thread::sleep(Duration::from_millis(20)),
                    None => {
                        return Err(Error::Transport(format!(
                            "rank {rank}: timed out connecting to rank {peer} at {host}:{port}"
                        )))
                    }
                }
            };
            stream.write_all(&handshake(rank, world))?;
            *slot = Some(stream);
        }

        listener.set_nonblocking(true)?;
        let mut pending = world - rank - 1;
        while pending > 0 {
            match listener.accept() {
                Ok((mut stream, _)) => {
                    stream.set_nonblocking(false)?;
                    stream.set_read_timeout(Some(deadline.saturating_duration_since(Instant::now()).max(Duration::from_millis(1))))?;
                    let mut h = [0u8; 12];
                    stream.read_exact(&mut h)?;
                    stream.set_read_timeout(None)?;
                    if h[0..4] != HANDSHAKE_MAGIC {
                        return Err(Error::Transport("bad handshake magic".into()));
                    }
                    let peer = u32::from_le_bytes(h[4..8].try_into().unwrap()) as usize;
                    let peer_world = u32::from_le_bytes(h[8..12].try_into().unwrap()) as usize;
                    if peer_world != world || peer <= rank || peer >= world || streams[peer].is_some() {
                        return Err(Error::Transport(format!(
                            "unexpected handshake from rank {peer} (world {peer_world})"
                        )));
                    }
                    streams[peer] = Some(stream);
                    pending -= 1;
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return Err(Error::Transport(format!(
                            "rank {rank}: timed out waiting for {pending} peers"
                        )));
                    }
                    thread::sleep(Duration::from_millis(5));
                }
                Err(e) => return Err(e.into()),
            }
        }

        let mut writers = Vec::with_capacity(world);
        let mut receivers = Vec::with_capacity(world);
        for (peer, stream) in streams.into_iter().enumerate() {
            match stream {
                None => {
                    writers.push(None);
                    receivers.push(None);
                }
                Some(stream) => {
                    stream.set_nodelay(true)?;
                    let mut reader = stream.try_clone()?;
                    let (tx, rx) = channel();
                    thread::Builder::new()
                        .name(format!("rank{rank}-from{peer}"))
                        .spawn(move || loop {
                            match read_frame(&mut reader) {
                                Ok(Some(f)) => {
                                    if tx.send(Ok(f)).is_err() {
                                        break;
                                    }
                                }
                                Ok(None) => break,
                                Err(e) => {
                                    let _ = tx.send(Err(e));
                                    break;
                                }
                            }
                        })?;
                    writers.push(Some(stream));
                    receivers.push(Some(rx));
                }
            }
        }
        Ok(TcpTransport {
            rank,
            world_size: world,
            writers,
            receivers,
        })
    }
}

impl Transport for TcpTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn world_size(&self) -> usize {
        self.world_size
    }

    fn send(&mut self, dest: usize, frame: Frame) -> Result<()> {
        let rank = self.rank;
        let stream = self
            .writers
            .get_mut(dest)
            .and_then(Option::as_mut)
            .ok_or_else(|| Error::Usage(format!("rank {rank} cannot send to {dest}")))?;
        write_frame(stream, &frame)
            .map_err(|e| Error::Transport(format!("send to rank {dest}: {e}")))
    }

    fn recv(&mut self, source: usize) -> Result<Frame> {
        let rank = self.rank;
        let rx = self
            .receivers
            .get(source)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Usage(format!("rank {rank} cannot receive from {source}")))?;
        match rx.recv() {
            Ok(r) => r,
            Err(_) => Err(Error::Transport(format!("rank {source} closed the connection"))),
        }
    }
}

impl Drop for TcpTransport {
    fn drop(&mut self) {
        for s in self.writers.iter().flatten() {
            let _ = s.shutdown(Shutdown::Write);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_file_parsing() {
        let job = JobFile::parse("# comment\n1 127.0.0.1 9001\n0 localhost 9000\n\n").unwrap();
        assert_eq!(job.world_size(), 2);
        assert_eq!(job.address(0), &("localhost".to_string(), 9000));
        assert_eq!(JobFile::parse(&job.render()).unwrap(), job);
        assert!(JobFile::parse("0 h 1\n2 h 2\n").is_err());
        assert!(JobFile::parse("0 h 1\n0 h 2\n").is_err());
        assert!(JobFile::parse("0 h\n").is_err());
        assert!(JobFile::parse("").is_err());
    }
}
