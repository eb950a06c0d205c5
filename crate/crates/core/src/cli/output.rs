// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

//! Long-format tables written as CSV or JSON, plus optional PNG heat maps.
//!
//! Every file carries the crate version, the producing command, a parameter
//! fingerprint and the fully resolved parameters. No timestamps are written,
//! so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::OutputFormat;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    /// Non-finite numbers become strings; JSON has no literal for them.
    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(format!("{v:e}")),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Provenance written at the top of every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub version: &'static str,
    pub command: String,
    pub fingerprint: String,
    pub params: Value,
}

impl Metadata {
    pub fn new(command: &str, fingerprint: String, params: &impl Serialize) -> Self {
        Metadata {
            version: VERSION,
            command: command.to_string(),
            fingerprint,
            params: serde_json::to_value(params).expect("parameters serialize"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, meta: &Metadata) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# nvreadout {}", meta.version);
        let _ = writeln!(out, "# command: {}", meta.command);
        let _ = writeln!(out, "# fingerprint: {}", meta.fingerprint);
        let _ = writeln!(out, "# params: {}", meta.params);
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_json(&self, meta: &Metadata) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let doc = json!({
            "metadata": meta,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    /// Writes `<dir>/<stem>.csv` or `.json` and returns the path.
    pub fn write(
        &self,
        dir: &Path,
        stem: &str,
        format: OutputFormat,
        meta: &Metadata,
    ) -> std::io::Result<PathBuf> {
        let (ext, body) = match format {
            OutputFormat::Csv => ("csv", self.to_csv(meta)),
            OutputFormat::Json => ("json", self.to_json(meta)),
        };
        let path = dir.join(format!("{stem}.{ext}"));
        std::fs::write(&path, body)?;
        Ok(path)
    }
}

const PALETTE: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

fn colour(t: f64) -> [u8; 3] {
    let x = t.clamp(0.0, 1.0) * (PALETTE.len() - 1) as f64;
    let k = (x.floor() as usize).min(PALETTE.len() - 2);
    let f = x - k as f64;
    let mut c = [0u8; 3];
    for (ch, out) in c.iter_mut().enumerate() {
        *out = (PALETTE[k][ch] + f * (PALETTE[k + 1][ch] - PALETTE[k][ch])).round() as u8;
    }
    c
}

/// Renders `values[i][j]` on a log₁₀ colour scale, `i` along x and `j` along
/// y (increasing upward). Non-finite or non-positive cells are black.
pub fn write_heatmap_png(path: &Path, values: &[Vec<f64>]) -> Result<(), image::ImageError> {
    let width = values.len();
    let height = values.first().map_or(0, Vec::len);
    let logs: Vec<f64> = values
        .iter()
        .flatten()
        .filter(|v| v.is_finite() && **v > 0.0)
        .map(|v| v.log10())
        .collect();
    let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let img = image::RgbImage::from_fn(width as u32, height as u32, |x, y| {
        let v = values[x as usize][height - 1 - y as usize];
        if v.is_finite() && v > 0.0 {
            image::Rgb(colour((v.log10() - lo) / span))
        } else {
            image::Rgb([0, 0, 0])
        }
    });
    img.save(path)
}
