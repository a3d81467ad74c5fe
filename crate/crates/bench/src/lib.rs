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

//! Workload generation, oracle verification and benchmarking for bspframe.

pub mod bench;
pub mod conformance;
pub mod gen;
pub mod launch;
pub mod runner;
pub mod verify;
pub mod workload;

pub use gen::gen_table;
pub use verify::{verify, verify_on, VerifyReport};
pub use workload::{Operator, TransportKind, WorkloadSpec};
