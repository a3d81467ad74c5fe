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

//! Workload descriptions shared by `gen`, `verify` and `bench`.

use std::fmt;
use std::str::FromStr;

use bspframe::dist::{BroadcastSide, GroupbyStrategy, JoinAlgorithm};
use bspframe::{Error, Result};

/// Operators the harness can drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Select,
    Project,
    Map,
    Arith,
    RowAggregate,
    Join(JoinAlgorithm),
    Union,
    Difference,
    Unique,
    Groupby(GroupbyStrategy),
    Aggregate,
    Length,
    Equals,
    Sort,
    Rolling,
    CsvRoundTrip,
}

impl Operator {
    /// Every operator variant the verification suite covers.
    pub fn all() -> Vec<Operator> {
        vec![
            Operator::Select,
            Operator::Project,
            Operator::Map,
            Operator::Arith,
            Operator::RowAggregate,
            Operator::Join(JoinAlgorithm::Shuffle),
            Operator::Join(JoinAlgorithm::Broadcast(BroadcastSide::Auto)),
            Operator::Union,
            Operator::Difference,
            Operator::Unique,
            Operator::Groupby(GroupbyStrategy::HashShuffle),
            Operator::Groupby(GroupbyStrategy::MapRed),
            Operator::Aggregate,
            Operator::Length,
            Operator::Equals,
            Operator::Sort,
            Operator::Rolling,
            Operator::CsvRoundTrip,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Operator::Select => "select",
            Operator::Project => "project",
            Operator::Map => "map",
            Operator::Arith => "arith",
            Operator::RowAggregate => "row-aggregate",
            Operator::Join(_) => "join",
            Operator::Union => "union",
            Operator::Difference => "difference",
            Operator::Unique => "unique",
            Operator::Groupby(_) => "groupby",
            Operator::Aggregate => "aggregate",
            Operator::Length => "length",
            Operator::Equals => "equals",
            Operator::Sort => "sort",
            Operator::Rolling => "rolling",
            Operator::CsvRoundTrip => "csv",
        }
    }

    pub fn strategy(&self) -> &'static str {
        match self {
            Operator::Join(JoinAlgorithm::Shuffle) => "shuffle",
            Operator::Join(JoinAlgorithm::Broadcast(_)) => "broadcast",
            Operator::Groupby(GroupbyStrategy::HashShuffle) => "hash",
            Operator::Groupby(GroupbyStrategy::MapRed) => "mapred",
            _ => "-",
        }
    }

    pub fn is_ep(&self) -> bool {
        matches!(
            self,
            Operator::Select | Operator::Project | Operator::Map | Operator::Arith | Operator::RowAggregate
        )
    }

    /// Builds an operator from its CLI name and optional strategy flag.
    pub fn parse(name: &str, strategy: Option<&str>) -> Result<Operator> {
        let bad = |s: &str| Error::InvalidSpec(format!("unknown strategy `{s}` for {name}"));
        Ok(match name {
            "select" => Operator::Select,
            "project" => Operator::Project,
            "map" => Operator::Map,
            "arith" => Operator::Arith,
            "row-aggregate" => Operator::RowAggregate,
            "join" => Operator::Join(match strategy.unwrap_or("shuffle") {
                "shuffle" => JoinAlgorithm::Shuffle,
                "broadcast" => JoinAlgorithm::Broadcast(BroadcastSide::Auto),
                s => return Err(bad(s)),
            }),
            "union" => Operator::Union,
            "difference" => Operator::Difference,
            "unique" => Operator::Unique,
            "groupby" => Operator::Groupby(match strategy.unwrap_or("hash") {
                "hash" => GroupbyStrategy::HashShuffle,
                "mapred" => GroupbyStrategy::MapRed,
                s => return Err(bad(s)),
            }),
            "aggregate" => Operator::Aggregate,
            "length" => Operator::Length,
            "equals" => Operator::Equals,
            "sort" => Operator::Sort,
            "rolling" => Operator::Rolling,
            "csv" => Operator::CsvRoundTrip,
            other => return Err(Error::InvalidSpec(format!("unknown operator `{other}`"))),
        })
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.strategy() {
            "-" => f.write_str(self.name()),
            s => write!(f, "{}({s})", self.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportKind {
    #[default]
    InProc,
    Tcp,
}

impl FromStr for TransportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inproc" => Ok(TransportKind::InProc),
            "tcp" => Ok(TransportKind::Tcp),
            _ => Err(Error::InvalidSpec(format!("unknown transport `{s}`"))),
        }
    }
}

/// One cell of a verification or benchmark run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSpec {
    pub op: Operator,
    pub rows: usize,
    pub parallelism: usize,
    /// Distinct keys relative to `rows`, in `[1/rows, 1]`.
    pub cardinality: f64,
    pub seed: u64,
    pub transport: TransportKind,
}

impl WorkloadSpec {
    pub fn new(op: Operator, rows: usize, parallelism: usize, cardinality: f64, seed: u64) -> Self {
        WorkloadSpec { op, rows, parallelism, cardinality, seed, transport: TransportKind::InProc }
    }

    pub fn validate(&self) -> Result<()> {
        if self.parallelism == 0 {
            return Err(Error::InvalidSpec("parallelism must be at least 1".into()));
        }
        distinct_keys(self.rows, self.cardinality).map(|_| ())
    }

    pub fn distinct_keys(&self) -> Result<usize> {
        distinct_keys(self.rows, self.cardinality)
    }
}

/// `round(C * N)`, checked against `C ∈ [1/N, 1]`.
pub fn distinct_keys(rows: usize, cardinality: f64) -> Result<usize> {
    if rows == 0 {
        return Err(Error::InvalidSpec("row count must be at least 1".into()));
    }
    let n = rows as f64;
    // small slack so that C = 1/N survives floating-point rounding
    if !(cardinality.is_finite() && cardinality * n >= 1.0 - 1e-9 && cardinality <= 1.0) {
        return Err(Error::InvalidSpec(format!(
            "cardinality {cardinality} outside [1/{rows}, 1]"
        )));
    }
    Ok(((cardinality * n).round() as usize).clamp(1, rows))
}
