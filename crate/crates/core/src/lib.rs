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

//! Distributed-memory dataframes over bulk synchronous parallel collectives.
//!
//! A distributed table is a virtual collection of `P` row partitions sharing
//! one schema, one per worker. Distributed operators are compositions of
//! three building blocks:
//!
//! - serial operators on a single partition ([`local`]),
//! - auxiliary partitioning operators ([`partition`]),
//! - collective communication ([`comm`]),
//!
//! arranged in a small number of generic patterns ([`dist`]): embarrassingly
//! parallel, shuffle-compute, combine-shuffle-reduce, broadcast-compute,
//! globally-reduce, globally-ordered and halo exchange. Partitioned CSV
//! input/output lives in [`pio`].

pub mod comm;
pub mod dist;
pub mod error;
pub mod local;
pub mod partition;
pub mod pio;
pub mod table;

pub use dist::DistTable;
pub use comm::{Communicator, NumericArray, OpMetrics, ReduceOp, WorkerContext};
pub use error::{Error, Result};
pub use table::{
    concat_tables, table_from_columns, Column, Direction, Domain, Field, Schema, SortKey, Table,
    Value, ValueRef,
};
