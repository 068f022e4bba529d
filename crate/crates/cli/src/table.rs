use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Ordered key/value pairs written as comment lines.
    pub metadata: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Delimited,
    Report,
}

/// 12 significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        v.to_string()
    }
}

impl ResultTable {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table `{}`", self.name);
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_delimited(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}").unwrap();
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).unwrap();
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format_value(*v))).unwrap();
        }
        out.push_str(&String::from_utf8(w.into_inner().unwrap()).unwrap());
        out
    }

    pub fn to_report(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.name).unwrap();
        writeln!(out, "{}", "=".repeat(self.name.len())).unwrap();
        let kw = self.metadata.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.metadata {
            writeln!(out, "{k:<kw$}  {v}").unwrap();
        }
        out.push('\n');
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| format!("{:.6}", v)).collect())
            .collect();
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| cells.iter().map(|r| r[i].len()).chain([c.len()]).max().unwrap_or(0))
            .collect();
        let line = |vals: Vec<&str>| {
            vals.iter()
                .zip(&widths)
                .map(|(v, w)| format!("{v:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        writeln!(out, "{}", line(self.columns.iter().map(String::as_str).collect())).unwrap();
        for r in &cells {
            writeln!(out, "{}", line(r.iter().map(String::as_str).collect())).unwrap();
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Delimited => self.to_delimited(),
            Format::Report => self.to_report(),
        }
    }

    /// Inverse of [`ResultTable::to_delimited`]; the name comes from the
    /// `table` metadata entry when present.
    pub fn from_delimited(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix("# ") {
                Some(m) => {
                    let (k, v) = m
                        .split_once(": ")
                        .ok_or_else(|| CliError::Table(format!("bad metadata line `{line}`")))?;
                    metadata.push((k.to_string(), v.to_string()));
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let columns: Vec<String> = rdr
            .headers()
            .map_err(|e| CliError::Table(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| CliError::Table(e.to_string()))?;
            let row = rec
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| CliError::Table(format!("`{c}` is not a number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != columns.len() {
                return Err(CliError::Table("ragged row".into()));
            }
            rows.push(row);
        }
        let name = metadata
            .iter()
            .find(|(k, _)| k == "table")
            .map(|(_, v)| v.clone())
            .unwrap_or_default();
        Ok(Self {
            name,
            columns,
            rows,
            metadata,
        })
    }

    /// Writes `<dir>/<name>.csv` or `<dir>/<name>.txt`.
    pub fn emit(&self, dir: &Path, format: Format) -> Result<PathBuf> {
        let ext = match format {
            Format::Delimited => "csv",
            Format::Report => "txt",
        };
        let path = dir.join(format!("{}.{ext}", self.name));
        std::fs::write(&path, self.render(format)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
