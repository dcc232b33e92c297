//! Shared helpers for the plain-text model and dataset formats.
//!
//! Reals are written in scientific notation with 17 significant digits,
//! which round-trips every finite `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quat::Quaternion;

pub(crate) fn push_real(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

pub(crate) fn push_quaternion(out: &mut String, q: Quaternion) {
    for (n, c) in q.to_array().into_iter().enumerate() {
        if n > 0 {
            out.push(' ');
        }
        push_real(out, c);
    }
}

pub(crate) fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub(crate) fn parse_real(path: &Path, line: usize, token: &str) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| parse_error(path, line, format!("invalid number '{token}'")))?;
    if !v.is_finite() {
        return Err(parse_error(
            path,
            line,
            format!("non-finite number '{token}'"),
        ));
    }
    Ok(v)
}

/// Parses `key=value` tokens after a fixed header tag.
pub(crate) fn header_field<'a>(
    path: &Path,
    line: usize,
    tokens: &[&'a str],
    key: &str,
) -> Result<&'a str> {
    tokens
        .iter()
        .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| parse_error(path, line, format!("missing header field '{key}'")))
}

pub(crate) fn header_usize(path: &Path, line: usize, tokens: &[&str], key: &str) -> Result<usize> {
    let v = header_field(path, line, tokens, key)?;
    v.parse()
        .map_err(|_| parse_error(path, line, format!("field '{key}' is not a count: '{v}'")))
}
