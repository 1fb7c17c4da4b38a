//! Report assembly and serialization.

use crate::config::Format;
use num_complex::Complex64;
use serde_json::{json, Value};
use sturmdisc::Scaled;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits
            Cell::Num(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) => (if *x > 0.0 { "inf" } else { "-inf" }).into(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => quote(s),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Rows written as CSV; the JSON report carries richer structure.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self::with_header(header.iter().map(|h| h.to_string()).collect())
    }

    pub fn with_header(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// What a command produced, possibly before failing.
#[derive(Clone, Debug)]
pub struct Output {
    pub result: Value,
    pub table: Table,
    /// Outcome of the property check for commands that perform one.
    pub pass: Option<bool>,
}

impl Output {
    pub fn new(table: Table) -> Self {
        Output { result: json!({}), table, pass: None }
    }
}

pub fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// Value plus `ln |.|` and `arg`, which survive when the value overflows.
pub fn scaled(s: Scaled) -> Value {
    let v = s.value();
    json!({ "re": v.re, "im": v.im, "ln_abs": s.ln_abs(), "arg": s.arg() })
}

pub struct Report<'a> {
    pub command: &'a str,
    pub config: Value,
    pub output: Option<Output>,
    pub error: Option<String>,
}

impl Report<'_> {
    fn status(&self) -> &'static str {
        match (&self.error, self.output.as_ref().and_then(|o| o.pass)) {
            (Some(_), _) => "failed",
            (None, Some(false)) => "property-failed",
            _ => "ok",
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.json(),
            Format::Csv => self.csv(),
        }
    }

    fn json(&self) -> String {
        let doc = json!({
            "tool": "sturmdisc",
            "version": sturmdisc::VERSION,
            "command": self.command,
            "status": self.status(),
            "error": self.error,
            "pass": self.output.as_ref().and_then(|o| o.pass),
            "config": self.config,
            "result": self.output.as_ref().map(|o| o.result.clone()),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("reports serialize");
        s.push('\n');
        s
    }

    fn csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# sturmdisc {}\n", sturmdisc::VERSION));
        out.push_str(&format!("# command: {}\n", self.command));
        out.push_str(&format!("# status: {}\n", self.status()));
        if let Some(e) = &self.error {
            out.push_str(&format!("# error: {}\n", e.replace('\n', " ")));
        }
        out.push_str(&format!("# config: {}\n", serde_json::to_string(&self.config).expect("config serializes")));
        if let Some(o) = self.output.as_ref().filter(|o| !o.table.header.is_empty()) {
            out.push_str(&o.table.header.join(","));
            out.push('\n');
            for row in &o.table.rows {
                out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                out.push('\n');
            }
        }
        out
    }
}
