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

//! Localhost TCP jobs: as threads within this process, or as one child
//! process per rank.

use std::net::TcpListener;
use std::path::Path;
use std::process::{Child, Command};
use std::thread;
use std::time::Duration;

use bspframe::comm::tcp::{JobFile, TcpTransport};
use bspframe::{Communicator, Error, Result, WorkerContext};

pub const CONNECT_TIMEOUT: Duration = Duration::from_secs(30);

/// Connects rank `rank` of the job described by `job_file`.
pub fn connect(rank: usize, job_file: &Path) -> Result<WorkerContext> {
    let job = JobFile::load(job_file)?;
    let t = TcpTransport::connect(rank, &job, CONNECT_TIMEOUT)?;
    Ok(WorkerContext::new(Communicator::new(Box::new(t))))
}

fn bind_local(p: usize) -> Result<(JobFile, Vec<TcpListener>)> {
    let listeners = (0..p).map(|_| TcpListener::bind("127.0.0.1:0")).collect::<std::io::Result<Vec<_>>>()?;
    let hosts = listeners
        .iter()
        .map(|l| Ok(("127.0.0.1".to_string(), l.local_addr()?.port())))
        .collect::<std::io::Result<Vec<_>>>()?;
    Ok((JobFile::from_addresses(hosts), listeners))
}

/// A job file naming `p` free localhost ports. The ports are released
/// before returning, so a child process can bind them.
pub fn free_local_job(p: usize) -> Result<JobFile> {
    Ok(bind_local(p)?.0)
}

/// Runs `f` on `p` threads connected over localhost TCP.
pub fn run_tcp_threads<R, F>(p: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(WorkerContext) -> R + Sync,
{
    let (job, listeners) = bind_local(p)?;
    let (f, job) = (&f, &job);
    thread::scope(|s| {
        let handles: Vec<_> = listeners
            .into_iter()
            .enumerate()
            .map(|(rank, l)| {
                s.spawn(move || {
                    let t = TcpTransport::connect_with_listener(rank, job, l, CONNECT_TIMEOUT)?;
                    Ok(f(WorkerContext::new(Communicator::new(Box::new(t)))))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    })
}

/// Spawns `exe args.. --rank r --world-size P --job-file <file>` for every
/// rank, waits for all of them and returns their captured stdout. Fails if
/// any child exits unsuccessfully.
pub fn spawn_ranks(exe: &Path, args: &[String], p: usize) -> Result<Vec<String>> {
    let dir = tempfile::tempdir()?;
    let job_path = dir.path().join("job.txt");
    std::fs::write(&job_path, free_local_job(p)?.render())?;
    let children: Vec<Child> = (0..p)
        .map(|r| {
            Command::new(exe)
                .args(args)
                .arg("--rank")
                .arg(r.to_string())
                .arg("--world-size")
                .arg(p.to_string())
                .arg("--job-file")
                .arg(&job_path)
                .stdout(std::process::Stdio::piped())
                .spawn()
        })
        .collect::<std::io::Result<_>>()?;
    let mut outputs = Vec::with_capacity(p);
    let mut failed = Vec::new();
    for (r, c) in children.into_iter().enumerate() {
        let out = c.wait_with_output()?;
        if !out.status.success() {
            failed.push(format!("rank {r}: {}", out.status));
        }
        outputs.push(String::from_utf8_lossy(&out.stdout).into_owned());
    }
    if !failed.is_empty() {
        return Err(Error::Remote(failed.join("; ")));
    }
    Ok(outputs)
}
