//! Rendering of reports as JSON and CSV.
//!
//! Floats are rounded to 12 significant digits and then printed in their
//! shortest round-trip form. JSON objects keep the field order of the
//! serialized structs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, Result};

/// Significant digits of every printed float.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Output format of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Rounds to [`SIGNIFICANT_DIGITS`] and prints the shortest decimal that
/// reads back to the rounded value.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    if rounded == 0.0 {
        return "0.0".into();
    }
    format!("{rounded:?}")
}

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i32> for Cell {
    fn from(x: i32) -> Self {
        Cell::Int(x.into())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.into())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
    }
}

/// What a command produced: a JSON document and, for tabular results, a
/// table. `companion` is written next to a CSV file when one is requested.
#[derive(Debug, Clone)]
pub struct Report {
    pub name: &'static str,
    pub json: Value,
    pub table: Option<Table>,
    pub companion: Option<Value>,
    /// Plain-text rendering, where a command has one.
    pub text: Option<String>,
}

impl Report {
    pub fn value(name: &'static str, json: Value) -> Self {
        Self {
            name,
            json,
            table: None,
            companion: None,
            text: None,
        }
    }

    pub fn json(name: &'static str, value: impl Serialize) -> Result<Self> {
        Ok(Self::value(name, to_value(value)?))
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn with_companion(mut self, value: Value) -> Self {
        self.companion = Some(value);
        self
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(render_json(&self.json)),
            Format::Csv => match &self.table {
                Some(t) => t.to_csv(),
                None => Err(CliError::Usage(format!("`{}` has no CSV form; use --format json", self.name))),
            },
        }
    }
}

pub fn to_value(value: impl Serialize) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| CliError::Output(e.to_string()))
}

/// Pretty JSON with two-space indentation and formatted floats.
pub fn render_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap_or(f64::NAN);
                out.push_str(&format_float(x));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.iter().all(|v| !v.is_array() && !v.is_object()) {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, v, depth + 1);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, v) in items.iter().enumerate() {
                indent(out, depth + 1);
                write_value(out, v, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, v)) in map.iter().enumerate() {
                indent(out, depth + 1);
                let _ = write!(out, "{}: ", Value::String(k.clone()));
                write_value(out, v, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            indent(out, depth);
            out.push('}');
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

/// Environment variable naming the directory for output files.
pub const OUTPUT_DIR_ENV: &str = "PINNING_OUTPUT_DIR";

/// Resolves where a report goes: `None` means standard output.
///
/// A relative `--output` is placed under the output directory when the
/// environment variable is set. Without `--output` but with the variable,
/// the file is named after the command.
pub fn destination(output: Option<&Path>, output_dir: Option<&Path>, name: &str, extension: &str) -> Option<PathBuf> {
    match (output, output_dir) {
        (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(dir)) => Some(dir.join(format!("{name}.{extension}"))),
        (None, None) => None,
    }
}

/// Writes rendered text, plus the companion JSON beside a CSV file.
pub fn emit(report: &Report, text: &str, format: Option<Format>, dest: Option<&Path>, stdout: &mut dyn std::io::Write) -> Result<()> {
    match dest {
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io { path: "<stdout>".into(), source: e }),
        Some(path) => {
            write_file(path, text)?;
            if let (Some(Format::Csv), Some(extra)) = (format, &report.companion) {
                write_file(&companion_path(path), &render_json(extra))?;
            }
            Ok(())
        }
    }
}

/// `out/sweep.csv` → `out/sweep.params.json`.
pub fn companion_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.params.json"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io { path: parent.to_path_buf(), source: e })?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}
