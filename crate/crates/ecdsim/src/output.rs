//! Result tables: CSV with a `#` metadata header, or a JSON mirror.
//!
//! Floats are written with 17 significant digits, so [`load_csv`] gives back
//! bit-identical values.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(x) => Some(*x),
            Cell::Text(s) => s.parse().ok(),
        }
    }

    fn to_field(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) if x.is_nan() => "nan".into(),
            Cell::Float(x) if x.is_infinite() => (if *x > 0.0 { "inf" } else { "-inf" }).into(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn from_field(s: &str) -> Cell {
        if let Ok(i) = s.parse::<i64>() {
            return Cell::Int(i);
        }
        match s.parse::<f64>() {
            Ok(x) => Cell::Float(x),
            Err(_) => Cell::Text(s.to_string()),
        }
    }
}

/// Non-finite floats become the strings `nan`, `inf` and `-inf`, which JSON
/// lacks.
impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Float(x) if x.is_finite() => s.serialize_f64(*x),
            Cell::Float(_) => s.serialize_str(&self.to_field()),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_field())
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Cell {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Cell {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Cell {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Cell {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    /// Ordered `(key, value)` header entries.
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Table {
        Table { metadata: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j].clone()).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), CliError> {
        for (k, v) in &self.metadata {
            for line in v.lines() {
                writeln!(w, "# {k}: {line}")?;
            }
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for r in &self.rows {
            out.write_record(r.iter().map(Cell::to_field))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), CliError> {
        serde_json::to_writer_pretty(w, self).map_err(|e| CliError::Io(e.to_string()))
    }

    /// Data section only, for comparing runs whose headers differ in time
    /// stamps.
    pub fn data_csv(&self) -> String {
        let mut t = self.clone();
        t.metadata.clear();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }
}

pub fn load_csv<R: BufRead>(mut r: R) -> Result<Table, CliError> {
    let mut metadata = Vec::new();
    let mut rest = String::new();
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            break;
        }
        match line.strip_prefix("# ") {
            Some(m) if rest.is_empty() => {
                let (k, v) = m.trim_end_matches(['\n', '\r']).split_once(": ").unwrap_or((m.trim_end(), ""));
                metadata.push((k.to_string(), v.to_string()));
            }
            _ => rest.push_str(&line),
        }
    }
    let mut rd = csv::Reader::from_reader(rest.as_bytes());
    let columns = rd.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        rows.push(rec?.iter().map(Cell::from_field).collect());
    }
    Ok(Table { metadata, columns, rows })
}

pub fn load_json<R: std::io::Read>(r: R) -> Result<Table, CliError> {
    serde_json::from_reader(r).map_err(|e| CliError::Io(e.to_string()))
}
