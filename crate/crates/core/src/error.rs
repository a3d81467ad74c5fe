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

//! Error type shared by every layer of the engine.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("collective misuse: {0}")]
    CollectiveMisuse(String),
    #[error("missing input at root rank {0}")]
    MissingInput(usize),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("target lengths mismatch: {0}")]
    TargetMismatch(String),
    #[error("missing value: {0}")]
    MissingValue(String),
    #[error("invalid window length {0}")]
    InvalidWindow(usize),
    #[error("operator error: {0}")]
    Op(String),
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("parse error in {}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: u64,
        message: String,
    },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("remote rank failed: {0}")]
    Remote(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
