use std::fmt::Display;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;
pub const EXIT_ESTIMATION: i32 = 4;

impl CliError {
    pub fn new(code: i32, e: impl Display) -> Self {
        CliError { code, message: e.to_string() }
    }

    pub fn validation(e: impl Display) -> Self {
        Self::new(EXIT_VALIDATION, e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(1, e)
    }
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub flag: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    /// SHA-256 over the `flag:digest` lines of all inputs.
    pub inputs_digest: String,
    pub seeds: Vec<u64>,
    pub outputs: Value,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub exit_code: i32,
    pub elapsed_ms: f64,
}

/// Collects report fields while a command runs.
pub struct Run {
    command: String,
    started: Instant,
    inputs: Vec<InputDigest>,
    pub seeds: Vec<u64>,
    pub warnings: Vec<String>,
}

impl Run {
    pub fn new(command: &str) -> Self {
        Run { command: command.into(), started: Instant::now(), inputs: Vec::new(), seeds: Vec::new(), warnings: Vec::new() }
    }

    /// Reads an input file and records its digest.
    pub fn read(&mut self, flag: &str, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        self.inputs.push(InputDigest { flag: flag.into(), sha256: hex::encode(Sha256::digest(&bytes)) });
        Ok(bytes)
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }

    pub fn finish(self, result: Result<Value, CliError>) -> RunReport {
        let mut h = Sha256::new();
        for i in &self.inputs {
            h.update(format!("{}:{}\n", i.flag, i.sha256).as_bytes());
        }
        let (outputs, error, exit_code) = match result {
            Ok(v) => (v, None, 0),
            Err(e) => (Value::Null, Some(e.message), e.code),
        };
        RunReport {
            command: self.command,
            inputs: self.inputs,
            inputs_digest: hex::encode(h.finalize()),
            seeds: self.seeds,
            outputs,
            warnings: self.warnings,
            error,
            exit_code,
            elapsed_ms: self.started.elapsed().as_secs_f64() * 1e3,
        }
    }
}
