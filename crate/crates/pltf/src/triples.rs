//! Plain-text triple format.
//!
//! ```text
//! N T
//! i j t v
//! ...
//! ```
//!
//! The header gives the number of objects and relations. Each body line is
//! one observed entry with zero-based indices and `v` in `{0, 1}`. Blank
//! lines and lines starting with `#` are ignored. Files are written with the
//! entries in `(i, j, t)` order and LF line endings.

use std::fmt::Write as _;
use std::path::Path;

use pltf_core::RelationalTensor;

use crate::fsutil::{read_to_string, write_atomic};
use crate::{Error, Result};

/// Parses triple text; `origin` names the source in error messages.
pub fn parse_triples(text: &str, origin: &str) -> Result<RelationalTensor> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| err(1, "missing `N T` header".into()))?;
    let dims = parse_fields::<usize>(header, 2, header_line, &err)?;
    let (n, t) = (dims[0], dims[1]);
    if n == 0 || t == 0 {
        return Err(err(
            header_line,
            format!("header dimensions must be positive, got {n} {t}"),
        ));
    }

    let mut triples = Vec::new();
    for (line, body) in lines {
        let f = parse_fields::<usize>(body, 4, line, &err)?;
        if f[0] >= n || f[1] >= n || f[2] >= t {
            return Err(err(
                line,
                format!(
                    "entry ({}, {}, {}) does not fit the header {n} {t}",
                    f[0], f[1], f[2]
                ),
            ));
        }
        if f[3] > 1 {
            return Err(err(line, format!("value must be 0 or 1, got {}", f[3])));
        }
        triples.push((f[0], f[1], f[2], f[3] as u8, line));
    }
    // conflicting duplicates are reported against the later line
    let mut seen = std::collections::HashMap::with_capacity(triples.len());
    for &(i, j, k, v, line) in &triples {
        if let Some(&(prev, prev_line)) = seen.get(&(i, j, k)) {
            if prev != v {
                return Err(err(
                    line,
                    format!("entry ({i}, {j}, {k}) conflicts with line {prev_line}"),
                ));
            }
        } else {
            seen.insert((i, j, k), (v, line));
        }
    }
    Ok(RelationalTensor::build(
        n,
        t,
        triples.into_iter().map(|(i, j, k, v, _)| (i, j, k, v)),
    )?)
}

fn parse_fields<T: std::str::FromStr>(
    line: &str,
    count: usize,
    number: usize,
    err: &impl Fn(usize, String) -> Error,
) -> Result<Vec<T>> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != count {
        return Err(err(
            number,
            format!("expected {count} fields, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>()
                .map_err(|_| err(number, format!("`{f}` is not a nonnegative integer")))
        })
        .collect()
}

pub fn format_triples(tensor: &RelationalTensor) -> String {
    let mut out = String::with_capacity(16 * (tensor.observed_count() + 1));
    let _ = writeln!(out, "{} {}", tensor.n_objects(), tensor.n_relations());
    for e in tensor.entries() {
        let _ = writeln!(out, "{} {} {} {}", e.i, e.j, e.t, u8::from(e.value));
    }
    out
}

pub fn load_triples(path: impl AsRef<Path>) -> Result<RelationalTensor> {
    let path = path.as_ref();
    parse_triples(&read_to_string(path)?, &path.display().to_string())
}

pub fn save_triples(tensor: &RelationalTensor, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), format_triples(tensor).as_bytes())
}
