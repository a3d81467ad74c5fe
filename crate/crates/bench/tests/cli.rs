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

//! The command-line binary and the TCP launch helpers.

use std::process::Command;

use bspframe::comm::inproc;
use bspframe_bench::conformance::run_script;
use bspframe_bench::launch::run_tcp_threads;

fn bspframe(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bspframe")).args(args).output().unwrap()
}

#[test]
fn conformance_over_tcp_threads_matches_inproc() {
    for p in [1, 2, 3] {
        let tcp = run_tcp_threads(p, |ctx| run_script(&ctx).unwrap()).unwrap();
        let local = inproc::run(p, |ctx| run_script(&ctx).unwrap());
        assert_eq!(tcp, local, "P={p}");
    }
}

#[test]
fn gen_is_deterministic() {
    let args = ["gen", "--rows", "300", "--cardinality", "0.1", "--seed", "4"];
    let a = bspframe(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, bspframe(&args).stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("k,v0,v1"));
    assert_eq!(text.lines().count(), 301);
}

#[test]
fn verify_exit_codes() {
    let base = ["verify", "--op", "unique", "--rows", "800", "--parallelism", "2", "--cardinality", "0.3"];
    assert!(bspframe(&base).status.success());
    let mut faulty = base.to_vec();
    faulty.extend(["--fault", "1"]);
    let out = bspframe(&faulty);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("FAIL"));
    assert_eq!(bspframe(&["verify", "--op", "pivot"]).status.code(), Some(2));
}

#[test]
fn verify_over_tcp_processes() {
    let out = bspframe(&[
        "verify", "--op", "groupby", "--strategy", "mapred", "--rows", "1000", "--parallelism", "3",
        "--transport", "tcp",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.starts_with("PASS groupby(mapred) P=3"));
}

#[test]
fn bench_writes_report_with_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = bspframe(&[
        "bench", "--op", "sort", "--rows", "2000", "--parallelism", "2", "--reps", "1",
        "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("sort,1,2000,0.9,-,") && lines[1].ends_with(",1.000"));
    assert!(lines[2].starts_with("sort,2,2000,0.9,-,"));
}
