//! Report and CSV writers. Every file is written to a temporary file in
//! the output directory and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
struct Software {
    name: &'static str,
    version: &'static str,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    schema_version: u32,
    software: Software,
    command: &'static str,
    config: &'a RunConfig,
    results: &'a serde_json::Value,
}

pub fn report_json(config: &RunConfig, results: &serde_json::Value) -> Result<Vec<u8>, CliError> {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        software: Software {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
        command: config.command.map(|c| c.name()).unwrap_or("unknown"),
        config,
        results,
    };
    let mut bytes = serde_json::to_vec_pretty(&report).map_err(|e| CliError::io(format!("serializing report: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Shortest text that parses back to `v`, as in the JSON report.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        serde_json::Number::from_f64(v).map_or_else(|| v.to_string(), |n| n.to_string())
    } else {
        v.to_string()
    }
}

/// Buffered CSV with a fixed header.
pub struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("writing to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("flushing to memory")
    }
}

/// Long format `experiment, seed, metric, value`.
pub struct LongTable(CsvTable);

impl Default for LongTable {
    fn default() -> Self {
        Self(CsvTable::new(&["experiment", "seed", "metric", "value"]))
    }
}

impl LongTable {
    pub fn push(&mut self, experiment: &str, seed: u64, metric: &str, value: f64) {
        self.0.row([experiment, &seed.to_string(), metric, &num(value)]);
    }

    pub fn push_opt(&mut self, experiment: &str, seed: u64, metric: &str, value: Option<f64>) {
        if let Some(v) = value {
            self.push(experiment, seed, metric, v);
        }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0.into_bytes()
    }
}

pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let target = dir.join(name);
    let io = |e: std::io::Error| CliError::io(format!("writing {}: {e}", target.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(target)
}
