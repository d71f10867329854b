use std::io::Write;

use fiid_core::stats::Summary;
use serde_json::{json, Map, Value};

use crate::CliError;

pub const SCHEMA: &str = "fiid-lab/1";

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// A flat table for `--format csv`.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub result: Value,
    /// One entry per trial; every aggregate is computed from these.
    pub records: Vec<Value>,
    pub aggregates: Map<String, Value>,
    pub checks: Vec<Check>,
    pub table: Table,
    /// Native text output, for the commands that have one.
    pub text: Option<String>,
}

impl Report {
    pub fn new(command: &'static str, config: Value) -> Self {
        Report {
            command,
            config,
            result: Value::Null,
            records: Vec::new(),
            aggregates: Map::new(),
            checks: Vec::new(),
            table: Table::default(),
            text: None,
        }
    }

    pub fn aggregate(&mut self, name: &str, xs: &[f64]) {
        self.aggregates.insert(name.to_string(), summary_json(&Summary::of(xs)));
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn to_json(&self, elapsed_ms: Option<f64>) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail}))
            .collect();
        let failures: Vec<Value> = self
            .failures()
            .iter()
            .map(|c| json!({"name": c.name, "detail": c.detail}))
            .collect();
        let mut out = json!({
            "schema": SCHEMA,
            "command": self.command,
            "config": self.config,
            "result": self.result,
            "records": self.records,
            "aggregates": self.aggregates,
            "checks": checks,
            "failures": failures,
            "passed": failures.is_empty(),
        });
        if let Some(ms) = elapsed_ms {
            out["timing_ms"] = json!(ms);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.table.header)?;
        for row in &self.table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn summary_json(s: &Summary) -> Value {
    json!({"count": s.count, "mean": s.mean, "min": s.min, "max": s.max, "stderr": s.stderr})
}
