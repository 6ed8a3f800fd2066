//! Tables, config headers and atomic file commits.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Val {
    F(f64),
    U(u64),
    S(String),
    B(bool),
    Null,
}

impl Val {
    fn csv(&self) -> String {
        match self {
            Val::F(x) if x.is_nan() => String::new(),
            Val::F(x) => format!("{x}"),
            Val::U(n) => n.to_string(),
            Val::S(s) => s.clone(),
            Val::B(b) => b.to_string(),
            Val::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Val::F(x) if x.is_finite() => json!(x),
            Val::F(_) | Val::Null => Value::Null,
            Val::U(n) => json!(n),
            Val::S(s) => json!(s),
            Val::B(b) => json!(b),
        }
    }
}

impl From<f64> for Val {
    fn from(x: f64) -> Self {
        Val::F(x)
    }
}

impl From<usize> for Val {
    fn from(n: usize) -> Self {
        Val::U(n as u64)
    }
}

impl From<u64> for Val {
    fn from(n: u64) -> Self {
        Val::U(n)
    }
}

impl From<bool> for Val {
    fn from(b: bool) -> Self {
        Val::B(b)
    }
}

impl From<&str> for Val {
    fn from(s: &str) -> Self {
        Val::S(s.to_string())
    }
}

impl From<String> for Val {
    fn from(s: String) -> Self {
        Val::S(s)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Val>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Val>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Direction columns `ux, uy, uz`, then `u4, u5, ...`.
pub fn direction_columns(d: usize) -> Vec<String> {
    (0..d)
        .map(|i| match i {
            0 => "ux".to_string(),
            1 => "uy".to_string(),
            2 => "uz".to_string(),
            _ => format!("u{}", i + 1),
        })
        .collect()
}

/// Resolved run configuration echoed into every output.
#[derive(Debug, Clone)]
pub struct Header {
    pub command: &'static str,
    pub config: Value,
    pub generated_unix: Option<u64>,
}

impl Header {
    pub fn new(command: &'static str, config: Value, timestamp: bool) -> Self {
        let generated_unix =
            timestamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        Self { command, config, generated_unix }
    }
}

pub fn render(table: &Table, header: &Header, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!("# fpptess {}\n", header.command));
            out.push_str(&format!("# config: {}\n", header.config));
            if let Some(t) = header.generated_unix {
                out.push_str(&format!("# generated_unix: {t}\n"));
            }
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Val::csv).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out.into_bytes()
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let obj: serde_json::Map<String, Value> =
                        table.columns.iter().cloned().zip(row.iter().map(Val::json)).collect();
                    Value::Object(obj)
                })
                .collect();
            let mut doc = json!({ "command": header.command, "config": header.config, "rows": rows });
            if let Some(t) = header.generated_unix {
                doc["generated_unix"] = json!(t);
            }
            let mut bytes = serde_json::to_vec_pretty(&doc).expect("json values always serialize");
            bytes.push(b'\n');
            bytes
        }
    }
}

/// Writes every file to a temporary sibling first and renames only after
/// all writes succeeded, so a failed run leaves no partial outputs.
pub fn commit(files: Vec<(PathBuf, Vec<u8>)>) -> Result<(), CliError> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| io_error(&path, e))?;
        tmp.write_all(&bytes).map_err(|e| io_error(&path, e))?;
        tmp.as_file().sync_all().map_err(|e| io_error(&path, e))?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(&path).map_err(|e| io_error(&path, e.error))?;
    }
    Ok(())
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
