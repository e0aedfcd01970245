use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use granular_slope::format::round_sig;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
    quiet: bool,
}

impl Output {
    pub fn new(path: Option<PathBuf>, format: Option<Format>, quiet: bool) -> Self {
        Output {
            path,
            format,
            quiet,
        }
    }

    /// Writes the result to `--out`, or stdout.
    pub fn emit(&self, text: &str) -> Result<(), CliError> {
        match &self.path {
            Some(p) => write_file(p, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    pub fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    pub fn warn(&self, msg: impl AsRef<str>) {
        eprintln!("warning: {}", msg.as_ref());
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Pretty JSON with every float rounded to 9 significant digits. Keys come
/// out sorted, so the text depends only on the value.
pub fn json_text(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(&round_json(value)).expect("JSON value serializes");
    text.push('\n');
    text
}

fn round_json(value: &Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.iter().map(round_json).collect()),
        Value::Object(map) => Value::Object(
            map.iter()
                .map(|(k, v)| (k.clone(), round_json(v)))
                .collect(),
        ),
        other => other.clone(),
    }
}

/// JSON number, or null when not finite.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}
