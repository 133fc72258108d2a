//! Output files. Each artifact `name` is accompanied by `name.meta.json`
//! recording the command, library version and config hash; run-level
//! results go to `<command>.json`. Nothing time-dependent is written, so a
//! re-run of the same config reproduces every file byte for byte.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::SCHEMA_VERSION;
use crate::error::CliError;

fn output_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

/// Hex sha256 of the compact JSON serialisation of the effective config.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let bytes = serde_json::to_vec(cfg).expect("configs serialise");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct RunOutput {
    dir: PathBuf,
    command: &'static str,
    config: Value,
    hash: String,
    files: Vec<String>,
}

impl RunOutput {
    pub fn new<T: Serialize>(dir: &Path, command: &'static str, cfg: &T) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| output_err(dir, e))?;
        Ok(RunOutput {
            dir: dir.to_path_buf(),
            command,
            config: serde_json::to_value(cfg).expect("configs serialise"),
            hash: config_hash(cfg),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn meta(&self, extra: Value) -> Value {
        let mut v = json!({
            "command": self.command,
            "version": pspin_core::VERSION,
            "schema_version": SCHEMA_VERSION,
            "config_hash": self.hash,
        });
        if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
            m.extend(e);
        }
        v
    }

    fn write_json(&self, path: &Path, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("json values serialise");
        text.push('\n');
        fs::write(path, text).map_err(|e| output_err(path, e))
    }

    pub fn csv(&mut self, name: &str, columns: &[&str]) -> Result<CsvFile, CliError> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| output_err(&path, e))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{}", columns.join(",")).map_err(|e| output_err(&path, e))?;
        let meta = self.meta(json!({ "file": name, "columns": columns }));
        self.write_json(&self.path(&format!("{name}.meta.json")), &meta)?;
        self.files.push(name.to_string());
        Ok(CsvFile {
            w,
            path,
            width: columns.len(),
        })
    }

    /// Records an artifact written by other means (e.g. a checkpoint).
    pub fn register(&mut self, name: &str, format: &str) -> Result<(), CliError> {
        let meta = self.meta(json!({ "file": name, "format": format }));
        self.write_json(&self.path(&format!("{name}.meta.json")), &meta)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `<command>.json` and returns its contents.
    pub fn finish(self, summary: Value) -> Result<Value, CliError> {
        let record = self.meta(json!({
            "config": self.config,
            "artifacts": self.files,
            "summary": summary,
        }));
        self.write_json(&self.path(&format!("{}.json", self.command)), &record)?;
        Ok(record)
    }
}

pub struct CsvFile {
    w: BufWriter<File>,
    path: PathBuf,
    width: usize,
}

impl CsvFile {
    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        debug_assert_eq!(fields.len(), self.width);
        writeln!(self.w, "{}", fields.join(",")).map_err(|e| output_err(&self.path, e))
    }

    pub fn nums(&mut self, values: &[f64]) -> Result<(), CliError> {
        let fields: Vec<String> = values.iter().map(|&x| num(x)).collect();
        self.row(&fields)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.w.flush().map_err(|e| output_err(&self.path, e))
    }
}
