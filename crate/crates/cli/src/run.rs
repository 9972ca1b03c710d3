//! Shared plumbing: errors and exit codes, config loading, provenance
//! headers and output sinks.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use lcu_core::LcuError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configs or input files; exit status 2.
    Usage(String),
    /// A check or computation failed on valid input; exit status 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<LcuError> for CliError {
    fn from(e: LcuError) -> Self {
        if e.is_recovery_failure() {
            CliError::Failed(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Overlays the top-level keys of the JSON document at `path` onto
/// `default`. Unknown keys are rejected so that typos do not pass silently.
pub fn load_config<T: Serialize + DeserializeOwned>(path: Option<&Path>, default: T) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(default);
    };
    let text = read_text(path)?;
    let user: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let Value::Object(user) = user else {
        return Err(CliError::Usage(format!("{}: config must be a JSON object", path.display())));
    };
    let Value::Object(mut merged) = serde_json::to_value(&default).expect("configs serialize") else {
        unreachable!("configs are structs");
    };
    for (k, v) in user {
        if !merged.contains_key(&k) {
            let known: Vec<&String> = merged.keys().collect();
            return Err(CliError::Usage(format!(
                "{}: unknown key {k:?}; expected one of {known:?}",
                path.display()
            )));
        }
        merged.insert(k, v);
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// The comment block that opens every output file.
pub struct Provenance {
    lines: Vec<String>,
}

impl Provenance {
    /// Hashes the effective config (after defaults and `--seed`).
    pub fn new<T: Serialize>(command: &str, config: &T) -> Self {
        let bytes = serde_json::to_vec(config).expect("configs serialize");
        let hash = hex::encode(Sha256::digest(&bytes));
        Self {
            lines: vec![
                format!("lcu {VERSION}"),
                format!("command: {command}"),
                format!("config_sha256: {hash}"),
            ],
        }
    }

    pub fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.lines.push(format!("{key}: {value}"));
        self
    }

    pub fn csv_header(&self) -> String {
        self.lines.iter().map(|l| format!("# {l}\n")).collect()
    }

    /// Key/value view for JSON outputs, which cannot carry comments.
    pub fn json(&self) -> Value {
        let map = self
            .lines
            .iter()
            .skip(1)
            .filter_map(|l| l.split_once(": "))
            .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
            .chain(std::iter::once(("tool".to_string(), Value::String(format!("lcu {VERSION}")))))
            .collect();
        Value::Object(map)
    }
}

/// Writes to `<prefix><suffix>.<ext>` when `--out` is given, else stdout.
pub struct Sink {
    prefix: Option<String>,
}

impl Sink {
    pub fn new(prefix: Option<String>) -> Self {
        Self { prefix }
    }

    pub fn has_prefix(&self) -> bool {
        self.prefix.is_some()
    }

    pub fn write(&self, suffix: &str, ext: &str, content: &str) -> CliResult<Option<PathBuf>> {
        match &self.prefix {
            None => {
                print!("{content}");
                Ok(None)
            }
            Some(p) => {
                let path = PathBuf::from(format!("{p}{suffix}.{ext}"));
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir)
                        .map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
                }
                fs::write(&path, content)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                Ok(Some(path))
            }
        }
    }
}

/// Shortest round-trip float formatting; `nan` for NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:e}")
    }
}
