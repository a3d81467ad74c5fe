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

//! Partitioned CSV input and output.
//!
//! Dialect: comma separated, `\n` line ends, a header row naming the schema
//! columns, and RFC 4180 quoting (fields holding a comma, quote or line
//! break are quoted, embedded quotes doubled). Floats are written in the
//! shortest form that parses back to the same value. Input patterns may use
//! `*` within a single path segment.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Component, Path, PathBuf};

use crate::comm::{ReduceOp, WorkerContext};
use crate::dist::DistTable;
use crate::error::{Error, Result};
use crate::table::{concat_tables, Column, Schema, Table, ValueRef};

/// Files read by each rank, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileAssignment {
    pub per_rank: Vec<Vec<PathBuf>>,
}

impl FileAssignment {
    /// Sorted `files` dealt round-robin over `parts` ranks.
    pub fn even(files: &[PathBuf], parts: usize) -> FileAssignment {
        let mut sorted = files.to_vec();
        sorted.sort();
        sorted.dedup();
        let mut per_rank = vec![Vec::new(); parts];
        for (i, f) in sorted.into_iter().enumerate() {
            per_rank[i % parts].push(f);
        }
        FileAssignment { per_rank }
    }

    fn validate(&self, parts: usize) -> Result<()> {
        if self.per_rank.len() != parts {
            return Err(Error::Usage(format!(
                "file assignment covers {} ranks, job has {parts}",
                self.per_rank.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for f in self.per_rank.iter().flatten() {
            if !seen.insert(f) {
                return Err(Error::Usage(format!("{} assigned twice", f.display())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assignment {
    Even,
    Custom(FileAssignment),
}

fn wildcard_match(pattern: &str, name: &str) -> bool {
    let parts: Vec<&str> = pattern.split('*').collect();
    let (first, last) = (parts[0], parts[parts.len() - 1]);
    if parts.len() == 1 {
        return pattern == name;
    }
    if !name.starts_with(first) || name.len() < first.len() + last.len() || !name.ends_with(last) {
        return false;
    }
    let mut rest = &name[first.len()..name.len() - last.len()];
    for mid in &parts[1..parts.len() - 1] {
        match rest.find(mid) {
            Some(i) => rest = &rest[i + mid.len()..],
            None => return false,
        }
    }
    true
}

/// Expands `*` wildcards segment by segment; returns sorted matches.
pub fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>> {
    if !pattern.contains('*') {
        return Ok(vec![PathBuf::from(pattern)]);
    }
    let mut candidates = vec![PathBuf::new()];
    for comp in Path::new(pattern).components() {
        let seg = comp.as_os_str().to_string_lossy();
        let mut next = Vec::new();
        for base in &candidates {
            if matches!(comp, Component::Normal(_)) && seg.contains('*') {
                let dir = if base.as_os_str().is_empty() { Path::new(".") } else { base.as_path() };
                let Ok(entries) = fs::read_dir(dir) else { continue };
                for entry in entries {
                    let name = entry?.file_name().to_string_lossy().into_owned();
                    if wildcard_match(&seg, &name) {
                        next.push(base.join(name));
                    }
                }
            } else {
                next.push(base.join(comp.as_os_str()));
            }
        }
        candidates = next;
    }
    candidates.retain(|p| p.is_file());
    if candidates.is_empty() {
        return Err(Error::FileNotFound(PathBuf::from(pattern)));
    }
    candidates.sort();
    Ok(candidates)
}

fn parse_error(file: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { file: file.to_path_buf(), line, message: message.into() }
}

fn csv_error(file: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_error(file, line, format!("{other:?}")),
    }
}

/// Reads one CSV file whose header must name exactly the schema columns.
pub fn read_csv(path: &Path, schema: &Schema) -> Result<Table> {
    let file = File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(io::BufReader::new(file));
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let expected: Vec<&str> = schema.fields().iter().map(|f| f.name.as_str()).collect();
    if names != expected {
        return Err(Error::SchemaMismatch(format!(
            "{} has columns {names:?}, expected {expected:?}",
            path.display()
        )));
    }
    let mut columns: Vec<Column> = schema.domains().map(Column::empty).collect();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(|e| csv_error(path, e))? {
        let line = record.position().map_or(0, |p| p.line());
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            match col {
                Column::Int64(v) => v.push(field.parse().map_err(|e| {
                    parse_error(path, line, format!("`{field}` is not an int64: {e}"))
                })?),
                Column::Float64(v) => v.push(field.parse().map_err(|e| {
                    parse_error(path, line, format!("`{field}` is not a float64: {e}"))
                })?),
                Column::Utf8(v) => v.push(field.to_string()),
            }
        }
    }
    Table::from_columns(schema.clone(), columns)
}

fn render(v: ValueRef<'_>) -> std::borrow::Cow<'_, str> {
    match v {
        ValueRef::Int64(x) => x.to_string().into(),
        ValueRef::Float64(x) => x.to_string().into(),
        ValueRef::Utf8(s) => s.into(),
    }
}

/// Writes `table` with a header row.
pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    write_csv_to(table, io::BufWriter::new(File::create(path)?))
}

/// As [`write_csv`] into any writer.
pub fn write_csv_to<W: Write>(table: &Table, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(out);
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(io::Error::other(format!("{other:?}"))),
    };
    w.write_record(table.schema().fields().iter().map(|f| f.name.as_str()))
        .map_err(io_err)?;
    for r in 0..table.len() {
        w.write_record((0..table.width()).map(|c| render(table.value(c, r)).into_owned()))
            .map_err(io_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(io::Error::other(e.to_string())))?
        .flush()?;
    Ok(())
}

/// Turns a local outcome into a job-wide one: if any rank failed, every
/// rank returns an error (its own, or a remote-failure notice).
fn agree<T>(ctx: &WorkerContext, local: Result<T>) -> Result<T> {
    let ok = ctx.comm().allreduce_i64(i64::from(local.is_ok()), ReduceOp::Min)?;
    match local {
        Err(e) => Err(e),
        Ok(_) if ok == 0 => Err(Error::Remote("partitioned I/O failed on another rank".into())),
        Ok(v) => Ok(v),
    }
}

/// Reads CSV files into a distributed table. `inputs` are paths or
/// patterns; with [`Assignment::Even`] their sorted expansion is dealt
/// round-robin over ranks, otherwise the custom assignment must list each
/// input file exactly once.
pub fn read_csv_dist(
    ctx: &WorkerContext,
    inputs: &[&str],
    schema: &Schema,
    assignment: &Assignment,
) -> Result<DistTable> {
    let parts = ctx.world_size();
    let local = (|| {
        let mut files = Vec::new();
        for pattern in inputs {
            files.extend(expand_glob(pattern)?);
        }
        let plan = match assignment {
            Assignment::Even => FileAssignment::even(&files, parts),
            Assignment::Custom(fa) => {
                fa.validate(parts)?;
                let listed: BTreeSet<&PathBuf> = fa.per_rank.iter().flatten().collect();
                let given: BTreeSet<&PathBuf> = files.iter().collect();
                if !inputs.is_empty() && listed != given {
                    return Err(Error::Usage(
                        "custom assignment does not cover the input files exactly".into(),
                    ));
                }
                fa.clone()
            }
        };
        let tables = plan.per_rank[ctx.rank()]
            .iter()
            .map(|p| read_csv(p, schema))
            .collect::<Result<Vec<_>>>()?;
        concat_tables(&std::sync::Arc::new(schema.clone()), &tables)
    })();
    let local = agree(ctx, local)?;
    Ok(DistTable::wrap(ctx, local))
}

/// Rank `r` writes its partition to `<dir>/<prefix>-<r>.csv`. Returns the
/// paths of all ranks' files.
pub fn write_csv_dist(df: &DistTable, dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let ctx = df.ctx();
    let path_of = |r: usize| dir.join(format!("{prefix}-{r}.csv"));
    let local = fs::create_dir_all(dir)
        .map_err(Error::from)
        .and_then(|_| write_csv(df.local(), &path_of(ctx.rank())));
    agree(ctx, local)?;
    Ok((0..ctx.world_size()).map(path_of).collect())
}
