//! Report envelopes, CSV tables and output placement.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::params::Params;

/// A plot-ready table with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new().delimiter(b',').from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(std::io::Error::other(e)))
    }
}

/// Which artifact a command prints when no output directory is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Primary {
    Json,
    Csv,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub name: String,
    pub seed: u64,
    pub params: Params,
    pub failures: Vec<String>,
    pub result: Value,
    pub table: Option<Table>,
    pub primary: Primary,
    /// Human-readable one-liner, printed to stderr.
    pub summary: Option<String>,
    /// Files requested through explicit path parameters.
    pub extra_files: Vec<(PathBuf, String)>,
}

impl Report {
    pub fn new(name: &str, params: &Params, seed: u64, result: impl Serialize) -> Result<Self, CliError> {
        Ok(Report {
            name: name.to_string(),
            seed,
            params: params.clone(),
            failures: Vec::new(),
            result: to_value(result)?,
            table: None,
            primary: Primary::Json,
            summary: None,
            extra_files: Vec::new(),
        })
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self.primary = Primary::Csv;
        self
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        self.failures.push(msg.into());
    }

    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn envelope(&self) -> Value {
        json!({
            "scenario": self.name,
            "seed": self.seed,
            "params": self.params.map(),
            "pass": self.pass(),
            "failures": self.failures,
            "result": self.result,
        })
    }

    pub fn envelope_text(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(&self.envelope()).map_err(|e| CliError::Io(e.into()))?;
        s.push('\n');
        Ok(s)
    }

    /// Writes the report into `out_dir`, or prints the primary artifact.
    pub fn emit(&self, out_dir: Option<&Path>) -> Result<(), CliError> {
        for (path, content) in &self.extra_files {
            fs::write(path, content)?;
        }
        let stdout = std::io::stdout();
        let mut stdout = stdout.lock();
        match out_dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let json_path = dir.join(format!("{}.json", self.name));
                fs::write(&json_path, self.envelope_text()?)?;
                writeln!(stdout, "{}", json_path.display())?;
                if let Some(t) = &self.table {
                    let csv_path = dir.join(format!("{}.csv", self.name));
                    fs::write(&csv_path, t.to_csv()?)?;
                    writeln!(stdout, "{}", csv_path.display())?;
                }
            }
            None => match (self.primary, &self.table) {
                (Primary::Csv, Some(t)) => write!(stdout, "{}", t.to_csv()?)?,
                _ => write!(stdout, "{}", self.envelope_text()?)?,
            },
        }
        let stderr = std::io::stderr();
        let mut stderr = stderr.lock();
        if let Some(s) = &self.summary {
            writeln!(stderr, "{s}")?;
        }
        if !self.pass() {
            let listing = json!({"status": "failed", "scenario": self.name, "failures": self.failures});
            writeln!(stderr, "{listing}")?;
        }
        Ok(())
    }
}

pub fn to_value(v: impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Io(e.into()))
}

/// Shortest round-trip decimal, so tables are reproducible and locale free.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

pub fn ratio_decimal(r: &amenable::Ratio) -> String {
    num(amenable::ratio::ratio_to_f64(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_plain_decimals() {
        let mut t = Table::new(&["g", "rate"]);
        t.push(vec!["1".into(), num(0.5)]);
        t.push(vec!["2".into(), num(1e-13)]);
        assert_eq!(t.to_csv().unwrap(), "g,rate\n1,0.5\n2,0.0000000000001\n");
    }

    #[test]
    fn negative_zero_prints_as_zero() {
        assert_eq!(num(-0.0), "0");
    }

    #[test]
    fn envelope_lists_failures() {
        let mut r = Report::new("demo", &Params::new(), 7, json!({"x": 1})).unwrap();
        assert!(r.pass());
        r.fail("broken");
        let env = r.envelope();
        assert_eq!(env["pass"], json!(false));
        assert_eq!(env["failures"], json!(["broken"]));
        assert_eq!(env["seed"], json!(7));
    }
}
