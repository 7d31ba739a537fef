use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One sweep cell, as written to a JSON-lines file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub experiment_name: String,
    pub params: BTreeMap<String, Value>,
    pub results: BTreeMap<String, Value>,
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
    pub code_version: String,
}

/// Fields shared by every record of a run.
#[derive(Clone, Debug, Default)]
pub struct RecordMeta {
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
    /// Merged into each record's params; cell parameters win on clashes.
    pub extra_params: BTreeMap<String, Value>,
}

impl RecordMeta {
    pub fn untimed() -> Self {
        Self::default()
    }
}

impl ExperimentRecord {
    pub fn new(
        experiment_name: &str,
        params: BTreeMap<String, Value>,
        results: BTreeMap<String, Value>,
        meta: &RecordMeta,
    ) -> Self {
        let mut merged = meta.extra_params.clone();
        merged.extend(params);
        Self {
            schema_version: SCHEMA_VERSION,
            experiment_name: experiment_name.to_owned(),
            params: merged,
            results,
            started_at: meta.started_at,
            finished_at: meta.finished_at,
            code_version: CODE_VERSION.to_owned(),
        }
    }
}

/// Builds a `BTreeMap<String, Value>` from `key => value` pairs.
#[macro_export]
macro_rules! fields {
    ($($key:expr => $value:expr),* $(,)?) => {{
        #[allow(unused_mut)]
        let mut map = ::std::collections::BTreeMap::<String, ::serde_json::Value>::new();
        $(map.insert($key.to_string(), ::serde_json::json!($value));)*
        map
    }};
}

/// Appends records to a JSON-lines file, creating it if needed.
pub fn persist(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = Vec::new();
    for record in records {
        serde_json::to_writer(&mut buf, record)?;
        buf.push(b'\n');
    }
    file.write_all(&buf)?;
    file.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OnCorrupt {
    Abort,
    Skip,
}

/// A line that could not be read back.
#[derive(Clone, Debug, PartialEq)]
pub struct SkippedLine {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Loaded {
    pub records: Vec<ExperimentRecord>,
    pub skipped: Vec<SkippedLine>,
}

/// Reads every record of a JSON-lines file in file order. Blank lines are
/// ignored; line numbers are 1-based.
pub fn load(path: &Path, on_corrupt: OnCorrupt) -> Result<Loaded> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Loaded::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line, line_no) {
            Ok(record) => out.records.push(record),
            Err(err) if on_corrupt == OnCorrupt::Skip => out.skipped.push(SkippedLine {
                line: line_no,
                message: err.to_string(),
            }),
            Err(err) => return Err(err),
        }
    }
    Ok(out)
}

fn parse_line(line: &str, line_no: usize) -> Result<ExperimentRecord> {
    let corrupt = |message: String| Error::Corrupt {
        line: line_no,
        message,
    };
    let value: Value = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
    let found = value
        .get("schema_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| corrupt("missing schema_version".into()))?;
    if found != u64::from(SCHEMA_VERSION) {
        return Err(Error::SchemaVersion {
            line: line_no,
            found,
            expected: SCHEMA_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))
}

fn cell_text(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes one CSV row per record. Columns are `experiment_name`, then every
/// `param.*` key and every `result.*` key seen in any record, sorted. Arrays
/// and objects are written as JSON text.
pub fn write_csv<W: Write>(records: &[ExperimentRecord], writer: W) -> Result<()> {
    let params: BTreeSet<&String> = records.iter().flat_map(|r| r.params.keys()).collect();
    let results: BTreeSet<&String> = records.iter().flat_map(|r| r.results.keys()).collect();
    let mut csv = csv::Writer::from_writer(writer);
    let header = std::iter::once("experiment_name".to_owned())
        .chain(params.iter().map(|k| format!("param.{k}")))
        .chain(results.iter().map(|k| format!("result.{k}")));
    csv.write_record(header)?;
    for record in records {
        let row = std::iter::once(record.experiment_name.clone())
            .chain(
                params
                    .iter()
                    .map(|k| record.params.get(*k).map(cell_text).unwrap_or_default()),
            )
            .chain(
                results
                    .iter()
                    .map(|k| record.results.get(*k).map(cell_text).unwrap_or_default()),
            );
        csv.write_record(row)?;
    }
    csv.flush()?;
    Ok(())
}
