//! Plain-text serialization: C-style `%.12g` numbers, CSV tables, and flat
//! `key = value` metadata files.
//!
//! Every artifact this crate writes is UTF-8 with LF line endings and formats
//! floating-point fields with [`fmt_g12`], so re-running a pipeline with the
//! same seeds produces byte-identical files on every platform.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Significant digits used for every floating-point field we serialize.
pub const SIG_DIGITS: usize = 12;

/// Format `x` like C's `printf("%.12g", x)`.
pub fn fmt_g12(x: f64) -> String {
    fmt_g(x, SIG_DIGITS)
}

/// Format `x` like C's `printf("%.*g", prec, x)`.
pub fn fmt_g(x: f64, prec: usize) -> String {
    let prec = prec.max(1);
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let neg = x < 0.0;
    let a = x.abs();
    // Round to `prec` significant digits first; the decimal exponent that
    // decides fixed-vs-scientific form must be read *after* rounding.
    let sci = format!("{:.*e}", prec - 1, a);
    let epos = sci.find('e').expect("exponential format always contains 'e'");
    let mantissa = &sci[..epos];
    let exp: i32 = sci[epos + 1..].parse().expect("exponent is an integer");
    let body = if exp < -4 || exp >= prec as i32 {
        let m = strip_trailing_zeros(mantissa);
        format!("{}e{}{:02}", m, if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (prec as i32 - 1 - exp).max(0) as usize;
        strip_trailing_zeros(&format!("{:.*}", decimals, a))
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

fn strip_trailing_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Join a row of already-formatted fields into a CSV line.
pub fn csv_line<S: AsRef<str>>(fields: &[S]) -> String {
    let mut out = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(f.as_ref());
    }
    out.push('\n');
    out
}

/// Serialize a numeric table (no header) as CSV.
pub fn matrix_to_csv(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&fmt_g12(*v));
        }
        out.push('\n');
    }
    out
}

/// Parse a CSV numeric table; `skip_header` drops the first line.
pub fn matrix_from_csv(text: &str, skip_header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if skip_header && ln == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::InvalidInput(format!("line {}: not a number: {field:?}", ln + 1))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Write text to a file, creating parent directories as needed.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text.as_bytes())?;
    Ok(())
}

/// Read a whole file as UTF-8 text.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Serialize `key = value` pairs, one per line, in the given order.
pub fn meta_to_text(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

/// Parse a flat `key = value` file. `#` starts a comment; blank lines are
/// ignored; keys must be unique.
pub fn meta_from_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidInput(format!("line {}: expected `key = value`, got {raw:?}", ln + 1))
        })?;
        let k = k.trim().to_string();
        if k.is_empty() {
            return Err(Error::InvalidInput(format!("line {}: empty key", ln + 1)));
        }
        if pairs.iter().any(|(pk, _)| *pk == k) {
            return Err(Error::InvalidInput(format!("line {}: duplicate key {k:?}", ln + 1)));
        }
        pairs.push((k, v.trim().to_string()));
    }
    Ok(pairs)
}

/// FNV-1a hash of a byte string, hex-encoded; used to fingerprint configs in
/// artifact metadata.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}
