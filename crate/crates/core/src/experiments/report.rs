//! Machine-readable experiment reports: a config echo, per-trial records,
//! aggregate statistics and a pass verdict, serializable as JSON (stable
//! field order) or CSV (one row per trial plus a summary row).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::Parameter(format!("unknown output format '{other}'"))),
        }
    }
}

/// Echo of the resolved configuration, defaults filled in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub experiment: String,
    pub seed: u64,
    pub trials: u64,
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TrialRecord {
    pub fn new(index: u64) -> Self {
        Self { index, values: BTreeMap::new(), note: None }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    pub trials: Vec<TrialRecord>,
    pub aggregates: BTreeMap<String, Value>,
    pub pass: bool,
    pub wall_time_ms: u64,
}

impl ExperimentReport {
    pub fn aggregate_f64(&self, key: &str) -> Option<f64> {
        self.aggregates.get(key).and_then(Value::as_f64)
    }

    pub fn aggregate_bool(&self, key: &str) -> Option<bool> {
        self.aggregates.get(key).and_then(Value::as_bool)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// CSV with a header, one row per trial, and a trailing summary row
    /// holding the aggregates.
    pub fn to_csv(&self) -> String {
        let mut trial_keys: Vec<&String> = Vec::new();
        for t in &self.trials {
            for k in t.values.keys() {
                if !trial_keys.contains(&k) {
                    trial_keys.push(k);
                }
            }
        }
        trial_keys.sort();
        let agg_keys: Vec<&String> = self.aggregates.keys().collect();
        let mut out = String::new();
        out.push_str("index");
        for k in &trial_keys {
            out.push(',');
            out.push_str(k);
        }
        for k in &agg_keys {
            out.push(',');
            out.push_str(k);
        }
        out.push('\n');
        for t in &self.trials {
            out.push_str(&t.index.to_string());
            for k in &trial_keys {
                out.push(',');
                if let Some(v) = t.values.get(*k) {
                    out.push_str(&format!("{v}"));
                }
            }
            for _ in &agg_keys {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("summary");
        for _ in &trial_keys {
            out.push(',');
        }
        for k in &agg_keys {
            out.push(',');
            let v = &self.aggregates[*k];
            match v {
                Value::String(s) => out.push_str(s),
                other => out.push_str(&other.to_string()),
            }
        }
        out.push('\n');
        out
    }
}

/// Serializes the report in the requested format to a writer.
pub fn write_report(report: &ExperimentReport, format: OutputFormat, mut w: impl Write) -> Result<()> {
    match format {
        OutputFormat::Json => {
            w.write_all(report.to_json()?.as_bytes())?;
            w.write_all(b"\n")?;
        }
        OutputFormat::Csv => w.write_all(report.to_csv().as_bytes())?,
    }
    Ok(())
}

/// Writes the report to a file path.
pub fn emit_report(report: &ExperimentReport, format: OutputFormat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_report(report, format, std::io::BufWriter::new(file))
}
