use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde_json::Value;

use moelab::experiments::{persist, write_csv, Check, ExperimentRecord};

use crate::config::Format;

fn cell(value: &Value) -> String {
    match value {
        Value::Null => "-".to_owned(),
        Value::String(s) => s.clone(),
        Value::Number(x) if x.is_f64() => {
            let v = x.as_f64().unwrap_or(f64::NAN);
            if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e6) {
                format!("{v:.4e}")
            } else {
                format!("{v:.6}")
            }
        }
        other => other.to_string(),
    }
}

/// Prints records as an aligned table. The echoed `config` parameter is left out.
pub fn print_table(
    out: &mut impl Write,
    title: &str,
    records: &[ExperimentRecord],
) -> io::Result<()> {
    writeln!(out, "== {title} ==")?;
    let Some(first) = records.first() else {
        return writeln!(out, "(no records)");
    };
    let params: Vec<&String> = first.params.keys().filter(|k| *k != "config").collect();
    let results: Vec<&String> = first.results.keys().collect();
    let header: Vec<String> = params
        .iter()
        .chain(results.iter())
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            params
                .iter()
                .map(|k| r.params.get(*k).map(cell).unwrap_or_default())
                .chain(
                    results
                        .iter()
                        .map(|k| r.results.get(*k).map(cell).unwrap_or_default()),
                )
                .collect()
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(out, "{}", line(&header))?;
    for row in &rows {
        writeln!(out, "{}", line(row))?;
    }
    Ok(())
}

pub fn print_checks(out: &mut impl Write, checks: &[Check]) -> io::Result<()> {
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{tag}  {}  ({})", c.name, c.detail)?;
    }
    Ok(())
}

/// Writes records to `path` in the requested format. JSON lines are appended
/// to `path`; CSV replaces `<path stem>.<experiment>.csv`.
pub fn write_records(
    experiment: &str,
    records: &[ExperimentRecord],
    path: &Path,
    format: Format,
) -> moelab::Result<()> {
    if matches!(format, Format::Json | Format::Both) {
        persist(records, path)?;
    }
    if matches!(format, Format::Csv | Format::Both) {
        write_csv(
            records,
            File::create(path.with_extension(format!("{experiment}.csv")))?,
        )?;
    }
    Ok(())
}
