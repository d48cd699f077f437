//! Input parsing, error mapping and artifact writing.

use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input. Exit code 1.
    Usage(String),
    /// Valid input outside a formula's domain. Exit code 2.
    Domain(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Domain(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl From<freecontract::Error> for CliError {
    fn from(e: freecontract::Error) -> Self {
        if e.is_domain() {
            CliError::Domain(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let mut text = String::new();
    if path == Path::new("-") {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Usage(format!("reading stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))?;
    }
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// SHA-256 of the canonical JSON form of `value`.
pub fn spec_hash<T: Serialize>(value: &T) -> Result<String, CliError> {
    let canon = serde_json::to_string(value).map_err(|e| CliError::Usage(e.to_string()))?;
    let digest = Sha256::digest(canon.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Usage(format!("writing {}: {e}", path.display())))
}

/// Fully rendered output; nothing touches the filesystem until [`Artifact::write`].
pub struct Artifact {
    body: String,
    meta: Option<Value>,
}

impl Artifact {
    pub fn json(v: Value) -> Self {
        let mut body = serde_json::to_string_pretty(&v).expect("JSON values always serialize");
        body.push('\n');
        Artifact { body, meta: None }
    }

    pub fn csv(body: String, meta: Value) -> Self {
        Artifact { body, meta: Some(meta) }
    }

    /// Adds fields to the CSV sidecar; no effect on JSON artifacts.
    pub fn with_meta(mut self, extra: Value) -> Self {
        if let (Some(Value::Object(m)), Value::Object(x)) = (&mut self.meta, extra) {
            for (k, v) in x {
                m.entry(k).or_insert(v);
            }
        }
        self
    }

    /// Body to `out` (or stdout); the CSV sidecar to `<out>.meta.json` (or stderr).
    pub fn write(&self, out: Option<&Path>) -> Result<(), CliError> {
        let meta = self.meta.as_ref().map(|m| {
            let mut s = serde_json::to_string_pretty(m).expect("JSON values always serialize");
            s.push('\n');
            s
        });
        match out {
            Some(path) => {
                write_file(path, self.body.as_bytes())?;
                if let Some(m) = meta {
                    let mut side = PathBuf::from(path.as_os_str().to_owned());
                    side.as_mut_os_string().push(".meta.json");
                    write_file(&side, m.as_bytes())?;
                }
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(self.body.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| CliError::Usage(format!("writing stdout: {e}")))?;
                if let Some(m) = meta {
                    eprint!("{m}");
                }
            }
        }
        Ok(())
    }
}
