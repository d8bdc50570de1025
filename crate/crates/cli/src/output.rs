//! Report, metadata and table files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use oscbath::scenarios::{ScenarioReport, Table};

use crate::config::Format;

/// Everything that varies between runs of the same (config, seed) pair
/// goes here and nowhere else.
#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub scenario: &'a str,
    pub digest: &'a str,
    pub seed: u64,
    pub format: Format,
    pub threads: Option<usize>,
    pub versions: Value,
    pub wall_time_seconds: f64,
    /// Fully resolved parameters, defaults included.
    pub config: Value,
}

pub fn versions() -> Value {
    json!({
        "oscbath": oscbath::VERSION,
        "oscbath-cli": env!("CARGO_PKG_VERSION"),
    })
}

fn number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn table_csv(t: &Table) -> String {
    let mut s = t.columns.join(",");
    s.push('\n');
    for row in &t.rows {
        s.push_str(&row.iter().map(|&v| number(v)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

pub fn table_jsonl(t: &Table) -> String {
    let mut s = String::new();
    for row in &t.rows {
        let fields: Vec<String> = t
            .columns
            .iter()
            .zip(row)
            .map(|(c, &v)| {
                let v = if v.is_finite() { number(v) } else { "null".into() };
                format!("{}:{v}", Value::from(c.as_str()))
            })
            .collect();
        s.push('{');
        s.push_str(&fields.join(","));
        s.push_str("}\n");
    }
    s
}

fn write(dir: &Path, name: &str, contents: &str) -> io::Result<PathBuf> {
    let path = dir.join(name);
    let mut f = fs::File::create(&path)?;
    f.write_all(contents.as_bytes())?;
    Ok(path)
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Writes `report.json`, one data file per table and `metadata.json`.
pub fn write_report(
    dir: &Path,
    report: &ScenarioReport,
    format: Format,
    meta: &Metadata<'_>,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = vec![write(dir, "report.json", &pretty(report))?];
    for t in &report.tables {
        let (ext, body) = match format {
            Format::Csv => ("csv", table_csv(t)),
            Format::Jsonl => ("jsonl", table_jsonl(t)),
        };
        written.push(write(dir, &format!("{}.{ext}", t.name), &body)?);
    }
    written.push(write(dir, "metadata.json", &pretty(meta))?);
    Ok(written)
}

/// Writes a report describing a numerical failure.
pub fn write_failure(dir: &Path, failure: &Value, meta: &Metadata<'_>) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    Ok(vec![
        write(dir, "report.json", &pretty(failure))?,
        write(dir, "metadata.json", &pretty(meta))?,
    ])
}
