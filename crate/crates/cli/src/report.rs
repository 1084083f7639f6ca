//! Command reports: named checks plus one primary table.

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use hslab::io::{fmt_f64, to_json, Table};

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// "<" : value < tolerance, ">" : value > tolerance, "=" : value == tolerance
    pub relation: &'static str,
    pub pass: bool,
}

fn ordered_map<S: Serializer>(pairs: &[(String, Cell)], s: S) -> Result<S::Ok, S::Error> {
    let mut m = s.serialize_map(Some(pairs.len()))?;
    for (k, v) in pairs {
        m.serialize_entry(k, v)?;
    }
    m.end()
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub status: &'static str,
    #[serde(serialize_with = "ordered_map")]
    pub summary: Vec<(String, Cell)>,
    pub checks: Vec<Check>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Report {
            command: command.into(),
            status: "pass",
            summary: Vec::new(),
            checks: Vec::new(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, v: impl Into<Cell>) {
        self.summary.push((key.into(), v.into()));
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    fn push_check(&mut self, name: String, value: f64, tolerance: f64, relation: &'static str, pass: bool) {
        if !pass {
            self.status = "fail";
        }
        self.checks.push(Check {
            name,
            value,
            tolerance,
            relation,
            pass,
        });
    }

    pub fn below(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        self.push_check(name.into(), value, tol, "<", value < tol);
    }

    pub fn above(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push_check(name.into(), value, bound, ">", value > bound);
    }

    pub fn equal(&mut self, name: impl Into<String>, value: f64, expected: f64) {
        self.push_check(name.into(), value, expected, "=", value == expected);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn render(&self, csv: bool) -> String {
        if !csv {
            return to_json(self);
        }
        let mut out = String::new();
        let mut s = Table::new(&["key", "value"]);
        s.push(vec!["command".into(), self.command.clone()]);
        s.push(vec!["status".into(), self.status.into()]);
        for (k, v) in &self.summary {
            s.push(vec![k.clone(), v.text()]);
        }
        out.push_str(&s.to_csv());
        out.push('\n');
        let mut c = Table::new(&["check", "value", "relation", "tolerance", "pass"]);
        for ch in &self.checks {
            c.push(vec![
                ch.name.clone(),
                fmt_f64(ch.value),
                ch.relation.into(),
                fmt_f64(ch.tolerance),
                ch.pass.to_string(),
            ]);
        }
        out.push_str(&c.to_csv());
        if !self.columns.is_empty() {
            out.push('\n');
            let cols: Vec<&str> = self.columns.iter().map(|s| s.as_str()).collect();
            let mut t = Table::new(&cols);
            for r in &self.rows {
                t.push(r.iter().map(|c| c.text()).collect());
            }
            out.push_str(&t.to_csv());
        }
        out
    }
}
