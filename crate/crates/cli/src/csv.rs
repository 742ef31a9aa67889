//! Plot-ready CSV with a provenance header.
//!
//! Numbers use 17 significant digits in scientific notation; comment and
//! footer lines start with `#`.

use std::fmt::Write as _;

use crate::config::{Experiment, ExperimentConfig};

/// Formats a real with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    columns: usize,
    body: String,
    footer: Vec<String>,
}

/// A single CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Real)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(x) => num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            // keep the row well formed whatever the message contains
            Cell::Text(t) => format!("\"{}\"", t.replace('"', "'").replace(['\n', '\r'], " ")),
            Cell::Empty => String::new(),
        }
    }
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        let header: Vec<String> = columns.into_iter().map(Into::into).collect();
        Self {
            columns: header.len(),
            header,
            body: String::new(),
            footer: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns, "row width");
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.body.push_str(&line.join(","));
        self.body.push('\n');
    }

    /// Adds a `# key,values...` footer row.
    pub fn footer(&mut self, key: &str, cells: Vec<Cell>) {
        let mut line = format!("# {key}");
        for c in &cells {
            line.push(',');
            line.push_str(&c.render());
        }
        self.footer.push(line);
    }

    /// Full document: provenance comments, column header, rows, footer.
    ///
    /// The recorded config leaves out `output_path`, so the same experiment
    /// written to two places is byte-identical.
    pub fn render(&self, experiment: Experiment, cfg: &ExperimentConfig) -> String {
        let cfg = &ExperimentConfig {
            output_path: None,
            ..cfg.clone()
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# nhaqo {} experiment={} config_sha256={} tolerance={} crossover_tolerance={} ep_gap_tolerance={} ep_overlap_threshold={}",
            env!("CARGO_PKG_VERSION"),
            experiment,
            cfg.digest(),
            num(cfg.tolerance),
            num(nhaqo_core::spectrum::CROSSOVER_TOLERANCE),
            num(nhaqo_core::spectrum::EP_GAP_TOLERANCE),
            num(nhaqo_core::spectrum::EP_OVERLAP_THRESHOLD),
        );
        for line in cfg.to_toml().lines() {
            let _ = writeln!(out, "# config {line}");
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        out.push_str(&self.body);
        for f in &self.footer {
            out.push_str(f);
            out.push('\n');
        }
        out
    }
}
