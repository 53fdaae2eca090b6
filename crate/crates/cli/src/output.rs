//! Scenario results and their CSV / JSON serialization.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliError;

/// A table cell; `Empty` renders as an empty CSV field and JSON `null`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // Negative zero prints as zero.
            Cell::Num(v) => format!("{:e}", v + 0.0),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
    }

    fn to_json(&self) -> Value {
        let rows = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let mut m = Map::new();
        m.insert("columns".into(), Value::from(self.columns.clone()));
        m.insert("rows".into(), Value::Array(rows));
        Value::Object(m)
    }
}

/// Result of one scenario. Metrics are keyed by name; `serde_json::Map`
/// keeps them sorted, which fixes the key order of every summary.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scenario: &'static str,
    pub status: String,
    pub metrics: Map<String, Value>,
    pub files: Vec<String>,
}

#[derive(Serialize)]
struct WithTable<'a> {
    #[serde(flatten)]
    summary: &'a Summary,
    table: Value,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub summary: Summary,
    pub table: Table,
}

impl Report {
    pub fn new(scenario: &'static str, status: impl Into<String>, table: Table) -> Self {
        Report { summary: Summary { scenario, status: status.into(), metrics: Map::new(), files: Vec::new() }, table }
    }

    pub fn metric(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.summary.metrics.insert(name.to_string(), value.into());
        self
    }

    pub fn number(&mut self, name: &str, value: f64) -> &mut Self {
        self.metric(name, Cell::Num(value).json())
    }

    /// Writes the artifacts into `dir` and records their names in the summary.
    pub fn write(&mut self, dir: &Path, stem: &str, format: Format) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
        let summary_name = format!("{stem}.json");
        match format {
            Format::Csv => {
                let table_name = format!("{stem}.csv");
                self.summary.files = vec![table_name.clone(), summary_name.clone()];
                write_file(&dir.join(&table_name), &self.table.to_csv())?;
                write_file(&dir.join(&summary_name), &(pretty(&self.summary) + "\n"))
            }
            Format::Json => {
                self.summary.files = vec![summary_name.clone()];
                let doc = WithTable { summary: &self.summary, table: self.table.to_json() };
                write_file(&dir.join(&summary_name), &(pretty(&doc) + "\n"))
            }
        }
    }
}

pub fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("JSON serialization of plain data")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(vec!["basis", "coefficient"]);
        t.push(vec!["eps_v".into(), Cell::Num(-0.003)]);
        t.push(vec!["a,b".into(), Cell::Empty]);
        t.push(vec!["zero".into(), Cell::Num(-0.0)]);
        assert_eq!(t.to_csv(), "basis,coefficient\neps_v,-3e-3\n\"a,b\",\nzero,0e0\n");
    }

    #[test]
    fn json_rows_and_nan() {
        let mut t = Table::new(vec!["x"]);
        t.push(vec![Cell::Num(f64::NAN)]);
        t.push(vec![Cell::Int(3)]);
        assert_eq!(t.to_json().to_string(), r#"{"columns":["x"],"rows":[[null],[3]]}"#);
    }
}
