//! Plain-text formats.
//!
//! Dictionary: first line `n m`, then `n` rows of `m` numbers.
//! Sparse code: first line `N m`, then one `chunk filter value` line per non-zero.
//! Signal: first line `N`, then `N` numbers (whitespace separated).
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::conv_dict::{LocalDictionary, SparseCode};
use crate::error::{CscError, Result};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse<T: FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| CscError::Parse { line, msg: format!("cannot parse {tok:?}") })
}

fn fields<T: FromStr>(line: usize, text: &str, expect: usize) -> Result<Vec<T>> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.len() != expect {
        return Err(CscError::Parse {
            line,
            msg: format!("expected {expect} fields, found {}", toks.len()),
        });
    }
    toks.into_iter().map(|t| parse(t, line)).collect()
}

/// Parses a dictionary and rescales its atoms to unit norm.
pub fn parse_dictionary(text: &str) -> Result<LocalDictionary> {
    let mut lines = content_lines(text);
    let (l0, header) = lines.next().ok_or(CscError::Parse { line: 1, msg: "empty file".into() })?;
    let hdr: Vec<usize> = fields(l0, header, 2)?;
    let (n, m) = (hdr[0], hdr[1]);
    let mut data = vec![0.0; n * m];
    for r in 0..n {
        let (ln, row) = lines.next().ok_or(CscError::Parse {
            line: l0 + r + 1,
            msg: format!("expected {n} rows, found {r}"),
        })?;
        let vals: Vec<f64> = fields(ln, row, m)?;
        for (f, v) in vals.into_iter().enumerate() {
            data[f * n + r] = v;
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(CscError::Parse { line: ln, msg: "trailing data".into() });
    }
    LocalDictionary::normalized(n, m, data)
}

pub fn format_dictionary(local: &LocalDictionary) -> String {
    let mut out = format!("{} {}\n", local.n(), local.m());
    for r in 0..local.n() {
        let row: Vec<String> = (0..local.m()).map(|f| format!("{:.17e}", local.get(r, f))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_code(text: &str) -> Result<SparseCode> {
    let mut lines = content_lines(text);
    let (l0, header) = lines.next().ok_or(CscError::Parse { line: 1, msg: "empty file".into() })?;
    let hdr: Vec<usize> = fields(l0, header, 2)?;
    let (len, m) = (hdr[0], hdr[1]);
    let mut entries = Vec::new();
    for (ln, row) in lines {
        let toks: Vec<&str> = row.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(CscError::Parse { line: ln, msg: "expected `chunk filter value`".into() });
        }
        let chunk: usize = parse(toks[0], ln)?;
        let filter: usize = parse(toks[1], ln)?;
        let value: f64 = parse(toks[2], ln)?;
        if chunk >= len || filter >= m {
            return Err(CscError::Parse {
                line: ln,
                msg: format!("entry ({chunk}, {filter}) outside {len}x{m}"),
            });
        }
        entries.push((chunk, filter, value));
    }
    SparseCode::from_entries(len, m, &entries)
}

pub fn format_code(code: &SparseCode) -> String {
    let m = code.m();
    let mut out = format!("{} {}\n", code.signal_len(), m);
    for j in code.support() {
        let _ = writeln!(out, "{} {} {:.17e}", j / m, j % m, code.values()[j]);
    }
    out
}

pub fn parse_signal(text: &str) -> Result<Vec<f64>> {
    let mut lines = content_lines(text);
    let (l0, header) = lines.next().ok_or(CscError::Parse { line: 1, msg: "empty file".into() })?;
    let len: usize = fields::<usize>(l0, header, 1)?[0];
    let mut out = Vec::with_capacity(len);
    let mut last = l0;
    for (ln, row) in lines {
        last = ln;
        for tok in row.split_whitespace() {
            out.push(parse(tok, ln)?);
        }
    }
    if out.len() != len {
        return Err(CscError::Parse {
            line: last,
            msg: format!("expected {len} samples, found {}", out.len()),
        });
    }
    Ok(out)
}

pub fn format_signal(signal: &[f64]) -> String {
    let mut out = format!("{}\n", signal.len());
    for v in signal {
        let _ = writeln!(out, "{v:.17e}");
    }
    out
}

pub fn read_dictionary(path: &Path) -> Result<LocalDictionary> {
    parse_dictionary(&std::fs::read_to_string(path)?)
}

pub fn read_code(path: &Path) -> Result<SparseCode> {
    parse_code(&std::fs::read_to_string(path)?)
}

pub fn read_signal(path: &Path) -> Result<Vec<f64>> {
    parse_signal(&std::fs::read_to_string(path)?)
}
