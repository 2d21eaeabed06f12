//! CSV and JSON emission for figure-ready outputs.
//!
//! Numbers are written in shortest round-trip form and rows in a fixed order,
//! so identical inputs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market_data::fmt_f64;

/// In-memory table written as one CSV file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io("<table writer>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
    }
}

pub fn num(x: f64) -> String {
    fmt_f64(x)
}

/// Empty cell for `None`.
pub fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn int(x: impl std::fmt::Display) -> String {
    x.to_string()
}

/// Pretty JSON with a trailing newline.
pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// A day-indexed series with one or more value columns, written as CSV with
/// header `t,<names...>` and mirrored as JSON `{ "t": [...], "<name>": [...] }`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    pub t: Vec<usize>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl SeriesReport {
    pub fn new(t: Vec<usize>) -> Self {
        Self { t, columns: Vec::new() }
    }

    pub fn column(mut self, name: &str, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.t.len());
        self.columns.push((name.to_string(), values));
        self
    }

    pub fn table(&self) -> Table {
        let mut header = vec!["t".to_string()];
        header.extend(self.columns.iter().map(|c| c.0.clone()));
        let mut table = Table::new(&header);
        for (j, t) in self.t.iter().enumerate() {
            let mut row = vec![int(t)];
            row.extend(self.columns.iter().map(|c| num(c.1[j])));
            table.push(row);
        }
        table
    }

    pub fn json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("t".into(), serde_json::json!(self.t));
        for (name, values) in &self.columns {
            map.insert(name.clone(), serde_json::json!(values));
        }
        serde_json::Value::Object(map)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        self.table().save(&dir.join(format!("{stem}.csv")))?;
        save_json(&dir.join(format!("{stem}.json")), &self.json())
    }
}
