//! CSV tables and the run manifest.

use crate::config::ExperimentConfig;
use crate::experiment::{Assertion, Outcome, Table};
use crate::RunError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::time::Duration;

/// Writes each table as `<dir>/<name>.csv`; returns the file names in order.
pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<Vec<String>, RunError> {
    std::fs::create_dir_all(dir)?;
    let mut names = Vec::with_capacity(tables.len());
    for t in tables {
        let name = format!("{}.csv", t.name);
        let mut w = csv::Writer::from_path(dir.join(&name))?;
        w.write_record(&t.header)?;
        for row in &t.rows {
            w.write_record(row.iter().map(|c| c.render()))?;
        }
        w.flush()?;
        names.push(name);
    }
    Ok(names)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    /// SHA-256 of the compact JSON config echo.
    pub config_sha256: String,
    pub wall_time_seconds: f64,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub assertions: Vec<Assertion>,
    /// `pass`, `fail` or `error`.
    pub status: &'static str,
    pub exit_code: i32,
    pub error: Option<ErrorRecord>,
}

fn status_of(code: i32) -> &'static str {
    match code {
        crate::EXIT_PASS => "pass",
        crate::EXIT_ASSERTION => "fail",
        _ => "error",
    }
}

impl Manifest {
    pub fn new(
        cfg: &ExperimentConfig,
        outcome: Option<&Outcome>,
        outputs: Vec<String>,
        error: Option<&RunError>,
        exit_code: i32,
        wall: Duration,
    ) -> Self {
        let config = cfg.to_json();
        let compact = serde_json::to_string(&config).expect("config values serialise");
        Manifest {
            tool: "tool",
            version: env!("CARGO_PKG_VERSION"),
            command: cfg.command.clone(),
            seed: cfg.params.seed().ok(),
            config,
            config_sha256: sha256_hex(compact.as_bytes()),
            wall_time_seconds: wall.as_secs_f64(),
            threads: rayon::current_num_threads(),
            outputs,
            assertions: outcome.map(|o| o.assertions.clone()).unwrap_or_default(),
            status: status_of(exit_code),
            exit_code,
            error: error.map(|e| ErrorRecord { kind: e.kind(), message: e.to_string(), exit_code: e.exit_code() }),
        }
    }

    /// Manifest for a config that never validated.
    pub fn config_failure(command: &str, error: &RunError) -> Self {
        Manifest {
            tool: "tool",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_owned(),
            seed: None,
            config: serde_json::Value::Null,
            config_sha256: String::new(),
            wall_time_seconds: 0.0,
            threads: rayon::current_num_threads(),
            outputs: Vec::new(),
            assertions: Vec::new(),
            status: "error",
            exit_code: error.exit_code(),
            error: Some(ErrorRecord { kind: error.kind(), message: error.to_string(), exit_code: error.exit_code() }),
        }
    }
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(m).map_err(|e| RunError::Io(e.into()))?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}
