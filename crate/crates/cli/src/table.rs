//! Flat result tables and their CSV / JSON renderings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::Format;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // 17 significant digits round-trip every f64
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Float(v) => Some(v),
            Cell::Int(v) => Some(v as f64),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    /// Empty for dimensionless or label columns.
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `#` header lines.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[(&str, &str)]) -> Self {
        Table {
            name: name.into(),
            columns: columns
                .iter()
                .map(|(n, u)| Column {
                    name: n.to_string(),
                    unit: u.to_string(),
                })
                .collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn add_column(&mut self, name: impl Into<String>, unit: impl Into<String>) {
        self.columns.push(Column {
            name: name.into(),
            unit: unit.into(),
        });
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width in table {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Numeric column by name.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let c = self
            .column_index(name)
            .unwrap_or_else(|| panic!("table {} has no column {name}", self.name));
        self.rows
            .iter()
            .map(|r| r[c].as_f64().expect("numeric column"))
            .collect()
    }

    /// Rows whose column `name` equals `value` exactly.
    pub fn filter_int(&self, name: &str, value: i64) -> Table {
        let c = self.column_index(name).expect("column");
        Table {
            rows: self
                .rows
                .iter()
                .filter(|r| r[c] == Cell::Int(value))
                .cloned()
                .collect(),
            ..self.clone()
        }
    }

    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header.iter().chain(&self.notes) {
            writeln!(out, "# {line}").unwrap();
        }
        let units: Vec<String> = self
            .columns
            .iter()
            .filter(|c| !c.unit.is_empty())
            .map(|c| format!("{} [{}]", c.name, c.unit))
            .collect();
        if !units.is_empty() {
            writeln!(out, "# units: {}", units.join("; ")).unwrap();
        }
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        writeln!(out, "{}", names.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }

    pub fn to_json(&self, header: &[String]) -> String {
        let doc = json!({
            "table": self.name,
            "header": header,
            "notes": self.notes,
            "columns": self.columns.iter().map(|c| json!({"name": c.name, "unit": c.unit})).collect::<Vec<_>>(),
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    /// Writes the table in every requested format; returns the paths.
    pub fn write(
        &self,
        dir: &Path,
        header: &[String],
        formats: &[Format],
    ) -> std::io::Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for format in formats {
            let (ext, body) = match format {
                Format::Csv => ("csv", self.to_csv(header)),
                Format::Json => ("json", self.to_json(header)),
            };
            let path = dir.join(format!("{}.{ext}", self.name));
            std::fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Parses the data rows of a CSV written by [`Table::to_csv`], skipping
/// comments and the column-name row.
pub fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let names = lines
        .next()
        .map(|l| l.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (names, rows)
}
