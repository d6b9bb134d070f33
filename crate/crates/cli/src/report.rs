//! Table rows and their CSV, Markdown and JSON renderings.
//!
//! Numeric columns carry their unit in the header name. The JSON form is
//! `{"metadata": {..}, "rows": [..]}`; the CSV form holds the same rows,
//! so parsing either gives identical row values.

use std::io::Write;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Format;

/// One solver run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub solver: String,
    pub formulation: String,
    pub level: usize,
    pub dofs: u64,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub time_s: f64,
    /// Setup time; zero unless requested.
    pub setup_s: f64,
    pub coarse_solves: usize,
    pub coarse_iterations: usize,
    /// Operator evaluations weighted to the finest level.
    pub a_count: f64,
    pub b_count: f64,
    pub c_count: f64,
    pub m_count: f64,
    pub memory_bytes: f64,
    /// Empty on success.
    pub error: String,
}

/// One FMG run on one finest level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmgRow {
    pub variant: String,
    pub level: usize,
    pub dofs: u64,
    pub gamma: f64,
    pub total_error: f64,
    pub discretization_error: f64,
    pub time_s: f64,
    pub error: String,
}

/// A name-value pair for scalar reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub quantity: String,
    pub value: f64,
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table<R> {
    pub metadata: serde_json::Map<String, serde_json::Value>,
    pub rows: Vec<R>,
}

impl<R: Serialize + DeserializeOwned> Table<R> {
    pub fn new(rows: Vec<R>) -> Self {
        Table {
            metadata: serde_json::Map::new(),
            rows,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        Ok(String::from_utf8(w.into_inner().context("flushing csv")?)?)
    }

    pub fn rows_from_csv(text: &str) -> Result<Vec<R>> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        rd.deserialize()
            .map(|r| r.context("parsing csv row"))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Markdown with the same columns as the CSV.
    pub fn to_markdown(&self) -> Result<String> {
        let csv = self.to_csv()?;
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(csv.as_bytes());
        let mut lines: Vec<Vec<String>> = Vec::new();
        for rec in rd.records() {
            lines.push(rec?.iter().map(|c| c.to_string()).collect());
        }
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("<!-- {k}: {v} -->\n"));
        }
        if let Some((head, body)) = lines.split_first() {
            out.push_str(&format!("| {} |\n", head.join(" | ")));
            out.push_str(&format!("|{}\n", "---|".repeat(head.len())));
            for row in body {
                let cells: Vec<String> = row.iter().map(|c| pretty_cell(c)).collect();
                out.push_str(&format!("| {} |\n", cells.join(" | ")));
            }
        }
        Ok(out)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Md => self.to_markdown(),
            Format::Json => self.to_json(),
        }
    }
}

// Shortens long floats in Markdown only; CSV and JSON keep full precision.
fn pretty_cell(c: &str) -> String {
    match c.parse::<f64>() {
        Ok(v) if c.contains('.') || c.contains('e') => {
            if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e6) {
                format!("{v:.3e}")
            } else {
                format!("{v:.4}")
            }
        }
        _ => c.to_string(),
    }
}

/// Writes `text` to `<dir>/<stem>.<ext>` or to stdout when `dir` is absent.
pub fn emit(text: &str, dir: Option<&std::path::Path>, stem: &str, format: Format) -> Result<()> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
            let path = d.join(format!("{stem}.{}", format.extension()));
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(level: usize, t: f64) -> RunRow {
        RunRow {
            solver: "umg".into(),
            formulation: "laplace".into(),
            level,
            dofs: 1234,
            seed: 7,
            iterations: 9,
            converged: true,
            final_residual: 3.0000000000000004e-9,
            time_s: t,
            setup_s: 0.0,
            coarse_solves: 9,
            coarse_iterations: 101,
            a_count: 144.703125,
            b_count: 0.1 + 0.2,
            c_count: 1.0 / 3.0,
            m_count: 0.0,
            memory_bytes: 78732.0,
            error: String::new(),
        }
    }

    #[test]
    fn csv_matches_json_rows() {
        let t = Table::new(vec![row(2, 0.123456789), row(3, 1e-7)]).with_meta("jobs", 1);
        let csv = t.to_csv().unwrap();
        let back = Table::<RunRow>::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(Table::<RunRow>::rows_from_csv(&csv).unwrap(), back.rows);
        assert!(csv.lines().next().unwrap().contains("time_s"));
    }

    #[test]
    fn markdown_has_one_line_per_row() {
        let t = Table::new(vec![row(2, 0.5), row(3, 0.25)]);
        let md = t.to_markdown().unwrap();
        assert_eq!(md.lines().count(), 4);
        assert!(md.starts_with("| solver | formulation | level |"));
    }
}
