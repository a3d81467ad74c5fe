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

//! `bspframe`: data generation, oracle verification and benchmarks.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bspframe::pio::write_csv_to;
use bspframe::{Error, Result, WorkerContext};
use bspframe_bench::bench::{bench, bench_on, bench_with, BenchConfig, BenchRow};
use bspframe_bench::conformance::{render, run_script};
use bspframe_bench::launch::{connect, spawn_ranks};
use bspframe_bench::runner::inputs_for;
use bspframe_bench::{gen_table, verify, verify_on, Operator, TransportKind, WorkloadSpec};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bspframe", version, about = "Distributed dataframe operators: data generation, verification and benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic table as CSV.
    Gen {
        #[arg(long, default_value_t = 10_000)]
        rows: usize,
        /// Number of value columns after the key column.
        #[arg(long, default_value_t = 2)]
        columns: usize,
        #[arg(long, default_value_t = 0.9)]
        cardinality: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check distributed results against the serial oracle.
    Verify {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[command(flatten)]
        job: JobArgs,
        /// Corrupt one output cell, chosen by this seed, before checking.
        #[arg(long)]
        fault: Option<u64>,
    },
    /// Time operators and write the report as CSV.
    Bench {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[command(flatten)]
        job: JobArgs,
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the collective conformance script and print its results.
    #[command(hide = true)]
    CommCheck {
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
        #[command(flatten)]
        job: JobArgs,
    },
}

#[derive(Args, Clone)]
struct MatrixArgs {
    /// Comma-separated operator names, or `all`.
    #[arg(long, default_value = "all")]
    op: String,
    /// Comma-separated strategies for join (shuffle, broadcast) and
    /// groupby (hash, mapred); all of them when absent.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    rows: usize,
    #[arg(long, value_delimiter = ',', default_value = "4")]
    parallelism: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.9")]
    cardinality: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Clone)]
struct JobArgs {
    #[arg(long, default_value = "inproc")]
    transport: TransportKind,
    /// Job file with `rank host port` lines. Together with `--rank` this
    /// process becomes one rank of a TCP job.
    #[arg(long, env = "BSPFRAME_JOB_FILE")]
    job_file: Option<PathBuf>,
    #[arg(long, env = "BSPFRAME_RANK")]
    rank: Option<usize>,
    #[arg(long, env = "BSPFRAME_WORLD_SIZE")]
    world_size: Option<usize>,
}

impl JobArgs {
    /// Connects when this process is one rank of a TCP job.
    fn member(&self) -> Result<Option<WorkerContext>> {
        let Some(rank) = self.rank else { return Ok(None) };
        let path = self
            .job_file
            .as_ref()
            .ok_or_else(|| Error::InvalidSpec("--rank needs --job-file".into()))?;
        let ctx = connect(rank, path)?;
        if let Some(p) = self.world_size {
            if p != ctx.world_size() {
                return Err(Error::InvalidSpec(format!(
                    "--world-size {p} but the job file lists {} ranks",
                    ctx.world_size()
                )));
            }
        }
        Ok(Some(ctx))
    }
}

const JOIN_STRATEGIES: [&str; 2] = ["shuffle", "broadcast"];
const GROUPBY_STRATEGIES: [&str; 2] = ["hash", "mapred"];

fn operators(args: &MatrixArgs) -> Result<Vec<Operator>> {
    let chosen: Option<Vec<&str>> = args.strategy.as_deref().map(|s| s.split(',').map(str::trim).collect());
    let mut ops = Vec::new();
    for name in args.op.split(',').map(str::trim) {
        let names: Vec<&str> = if name == "all" {
            let mut v: Vec<&str> = Operator::all().iter().map(|o| o.name()).collect();
            v.dedup();
            v
        } else {
            vec![name]
        };
        for name in names {
            let known: &[&str] = match name {
                "join" => &JOIN_STRATEGIES,
                "groupby" => &GROUPBY_STRATEGIES,
                _ => {
                    ops.push(Operator::parse(name, None)?);
                    continue;
                }
            };
            let picked: Vec<&str> = match &chosen {
                Some(c) => known.iter().copied().filter(|s| c.contains(s)).collect(),
                None => known.to_vec(),
            };
            if picked.is_empty() {
                return Err(Error::InvalidSpec(format!("no valid --strategy for {name}")));
            }
            for s in picked {
                ops.push(Operator::parse(name, Some(s))?);
            }
        }
    }
    Ok(ops)
}

fn matrix(args: &MatrixArgs, transport: TransportKind) -> Result<Vec<WorkloadSpec>> {
    let mut cells = Vec::new();
    for op in operators(args)? {
        for &p in &args.parallelism {
            for &c in &args.cardinality {
                let spec = WorkloadSpec { transport, ..WorkloadSpec::new(op, args.rows, p, c, args.seed) };
                spec.validate()?;
                cells.push(spec);
            }
        }
    }
    Ok(cells)
}

/// Arguments that make a child process run exactly `spec`.
fn cell_args(command: &str, spec: &WorkloadSpec) -> Vec<String> {
    let mut v = vec![
        command.to_string(),
        "--op".into(),
        spec.op.name().into(),
        "--rows".into(),
        spec.rows.to_string(),
        "--parallelism".into(),
        spec.parallelism.to_string(),
        "--cardinality".into(),
        spec.cardinality.to_string(),
        "--seed".into(),
        spec.seed.to_string(),
        "--transport".into(),
        "tcp".into(),
    ];
    if spec.op.strategy() != "-" {
        v.extend(["--strategy".into(), spec.op.strategy().into()]);
    }
    v
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_verify(matrix_args: &MatrixArgs, job: &JobArgs, fault: Option<u64>) -> Result<bool> {
    let cells = matrix(matrix_args, job.transport)?;
    if let Some(ctx) = job.member()? {
        let mut all = true;
        for spec in &cells {
            let report = verify_on(&ctx, spec, fault)?;
            if ctx.rank() == 0 {
                println!("{report}");
            }
            all &= report.passed;
        }
        return Ok(all);
    }
    let exe = std::env::current_exe()?;
    let mut failed = 0usize;
    for spec in &cells {
        let line = match job.transport {
            TransportKind::InProc => {
                let r = verify(spec, fault);
                failed += usize::from(!r.passed);
                r.to_string()
            }
            TransportKind::Tcp => {
                let mut args = cell_args("verify", spec);
                if let Some(f) = fault {
                    args.extend(["--fault".into(), f.to_string()]);
                }
                match spawn_ranks(&exe, &args, spec.parallelism) {
                    Ok(out) => out[0].trim_end().to_string(),
                    Err(e) => {
                        failed += 1;
                        format!("FAIL {} P={}: {e}", spec.op, spec.parallelism)
                    }
                }
            }
        };
        println!("{line}");
    }
    println!("{} of {} passed", cells.len() - failed, cells.len());
    Ok(failed == 0)
}

fn cmd_bench(matrix_args: &MatrixArgs, job: &JobArgs, config: BenchConfig, out: &Option<PathBuf>) -> Result<bool> {
    let cells = matrix(matrix_args, job.transport)?;
    if let Some(ctx) = job.member()? {
        // One rank of a spawned job: rank 0 prints bare report lines.
        for spec in &cells {
            let inputs = inputs_for(spec)?;
            if let Some(row) = bench_on(&ctx, spec, config, &inputs)? {
                println!("{}", row.csv_line());
            }
        }
        return Ok(true);
    }
    let mut w = output(out)?;
    let report = match job.transport {
        TransportKind::InProc => bench(&cells, config, Some(&mut w))?,
        TransportKind::Tcp => {
            let exe = std::env::current_exe()?;
            bench_with(&cells, Some(&mut w), |spec| {
                let mut args = cell_args("bench", spec);
                args.extend([
                    "--warmup".into(),
                    config.warmup.to_string(),
                    "--reps".into(),
                    config.reps.to_string(),
                ]);
                let out = spawn_ranks(&exe, &args, spec.parallelism)?;
                let line = out[0].lines().next().unwrap_or_default();
                line.parse::<BenchRow>()
            })?
        }
    };
    w.flush()?;
    Ok(report.rows.iter().all(|r| r.error.is_none()))
}

fn cmd_comm_check(parallelism: usize, job: &JobArgs) -> Result<bool> {
    let results = if let Some(ctx) = job.member()? {
        vec![run_script(&ctx)?]
    } else {
        let runs = bspframe::comm::inproc::run(parallelism, |ctx| run_script(&ctx));
        runs.into_iter().collect::<Result<Vec<_>>>()?
    };
    for (i, cases) in results.iter().enumerate() {
        let rank = job.rank.unwrap_or(i);
        for line in render(cases).lines() {
            println!("{rank}\t{line}");
        }
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Gen { rows, columns, cardinality, seed, out } => {
            let t = gen_table(rows, columns, cardinality, seed)?;
            let mut w = output(&out)?;
            write_csv_to(&t, &mut w)?;
            w.flush()?;
            Ok(true)
        }
        Cmd::Verify { matrix, job, fault } => cmd_verify(&matrix, &job, fault),
        Cmd::Bench { matrix, job, warmup, reps, out } => {
            cmd_bench(&matrix, &job, BenchConfig { warmup, reps }, &out)
        }
        Cmd::CommCheck { parallelism, job } => cmd_comm_check(parallelism, &job),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
