//! Flat `key=value` files: experiment configs and run manifests.
//!
//! Keys are long flag names without the leading dashes. Blank lines and
//! lines starting with `#` are skipped. Keys under `manifest.` describe a
//! run rather than configure one and are ignored when a file is used as a
//! config.

use std::path::Path;

use crate::fsutil::read_to_string;
use crate::{Error, Result};

pub const RESERVED_PREFIX: &str = "manifest.";

/// Entries in file order. A key may appear only once.
pub fn parse_config(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_string(),
            line: k + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, found `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(err("empty key".into()));
        }
        if out.iter().any(|(k, _)| k == key) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<Vec<(String, String)>> {
    parse_config(&read_to_string(path)?, &path.display().to_string())
}

pub fn format_config(entries: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        out.push_str(k);
        out.push('=');
        out.push_str(v);
        out.push('\n');
    }
    out
}
