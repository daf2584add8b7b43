//! Report emission: JSON or CSV for the main result, CSV pairs for plot
//! data, and side files such as witness signals.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Command, Format};
use crate::error::{AppError, AppResult};

/// Shortest round-trip text for `x`, in exponent form when tiny or huge.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// A numerical property checked by a pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// The value must not exceed this unless `at_least` is set.
    pub limit: f64,
    pub at_least: bool,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, at_least: false, passed: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, at_least: true, passed: value >= limit }
    }

    /// Pass/fail without a meaningful scalar.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self { name: name.into(), value: v, limit: 1.0, at_least: true, passed: ok }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let op = if self.at_least { ">=" } else { "<=" };
        let tag = if self.passed { "ok" } else { "FAILED" };
        write!(f, "{tag}: {} = {:e} ({op} {:e})", self.name, self.value, self.limit)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Two-column `quantity,value` table.
    pub fn key_values(pairs: &[(&str, f64)]) -> Self {
        let mut t = Self::new(&["quantity", "value"]);
        for (k, v) in pairs {
            t.push(vec![k.to_string(), num(*v)]);
        }
        t
    }

    pub fn to_csv(&self) -> AppResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| AppError::Config(format!("csv encoding: {e}"));
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| AppError::Config(format!("csv encoding: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Numeric series written as `<stem>_<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub columns: Vec<String>,
    pub points: Vec<Vec<f64>>,
}

impl Plot {
    pub fn new(name: &str, columns: &[&str], points: Vec<Vec<f64>>) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), points }
    }

    pub fn to_table(&self) -> Table {
        Table {
            columns: self.columns.clone(),
            rows: self.points.iter().map(|p| p.iter().copied().map(num).collect()).collect(),
        }
    }
}

/// Side file written as `<stem>_<name>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Everything a command produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub command: Command,
    pub json: String,
    pub table: Table,
    pub plots: Vec<Plot>,
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
    /// Replaces the JSON/CSV body when set (LP export).
    pub raw: Option<String>,
}

impl Output {
    pub fn new<T: Serialize>(command: Command, report: &T, table: Table, checks: Vec<Check>) -> AppResult<Self> {
        let json = to_json(report)?;
        Ok(Self { command, json, table, plots: Vec::new(), artifacts: Vec::new(), checks, raw: None })
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn body(&self, format: Format) -> AppResult<String> {
        if let Some(r) = &self.raw {
            return Ok(r.clone());
        }
        match format {
            Format::Json => Ok(self.json.clone()),
            Format::Csv => self.table.to_csv(),
        }
    }

    /// Writes the body to `out` (stdout when `None`) and, with a path,
    /// plot and artifact files beside it. Returns every path written.
    pub fn emit(&self, out: Option<&Path>, format: Format) -> AppResult<Vec<PathBuf>> {
        let body = self.body(format)?;
        let Some(path) = out else {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(|e| AppError::io("<stdout>", e))?;
            return Ok(Vec::new());
        };
        let mut written = vec![path.to_path_buf()];
        write_file(path, &body)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
        for p in &self.plots {
            let f = dir.join(format!("{stem}_{}.csv", p.name));
            write_file(&f, &p.to_table().to_csv()?)?;
            written.push(f);
        }
        for a in &self.artifacts {
            let f = dir.join(format!("{stem}_{}", a.name));
            write_file(&f, &a.contents)?;
            written.push(f);
        }
        Ok(written)
    }
}

pub fn to_json<T: Serialize>(v: &T) -> AppResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| AppError::Config(format!("json encoding: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, contents: &str) -> AppResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir.display().to_string(), e))?;
    }
    std::fs::write(path, contents).map_err(|e| AppError::io(path.display().to_string(), e))
}
