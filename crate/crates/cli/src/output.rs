//! CSV and JSON emission.
//!
//! CSV files carry one header row and 17-significant-digit floats, enough
//! to round-trip f64 exactly, so reruns with equal flags and seed are
//! byte-identical. The JSON sidecar records the fully resolved config and
//! its fingerprint; the timestamp is the only field allowed to differ
//! between identical runs.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    cols: usize,
    lines: Vec<String>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            cols: header.len(),
            lines: vec![header.join(",")],
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        assert_eq!(fields.len(), self.cols, "row width must match the header");
        let joined = fields
            .iter()
            .map(|f| f.as_ref())
            .collect::<Vec<_>>()
            .join(",");
        self.lines.push(joined);
    }

    pub fn rows(&self) -> usize {
        self.lines.len() - 1
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.lines.join("\n") + "\n")
    }
}

/// sha256 of the canonical JSON encoding of the resolved config. serde_json
/// keeps object keys sorted, so this is stable across runs.
pub fn config_fingerprint(resolved: &Value) -> String {
    let digest = Sha256::digest(resolved.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Expands the output basename into sibling .csv/.json paths, creating
/// parent directories as needed.
pub fn output_paths(base: &Path) -> io::Result<(PathBuf, PathBuf)> {
    if let Some(parent) = base.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok((base.with_extension("csv"), base.with_extension("json")))
}

/// Worker count is deliberately absent from the fingerprinted config:
/// results never depend on it, so runs that differ only in parallelism
/// fingerprint the same.
pub fn write_sidecar(
    path: &Path,
    command: &str,
    workers: Option<usize>,
    resolved: Value,
    results: Value,
) -> io::Result<()> {
    let doc = json!({
        "command": command,
        "resolved_config": resolved,
        "config_fingerprint": config_fingerprint(&resolved),
        "workers": workers,
        "timestamp": chrono::Utc::now().to_rfc3339(),
        "results": results,
    });
    let text = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    fs::write(path, text + "\n")
}
