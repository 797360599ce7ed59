//! Delimited text helpers shared by every on-disk format.
//!
//! All files are UTF-8, one record per line, fields separated by a tab.
//! Inside a field, `\\`, tab, newline and carriage return are written as
//! `\\\\`, `\\t`, `\\n` and `\\r`. Fields holding a `key=value,key=value` map
//! additionally escape `,` as `\\c` and `=` as `\\e` inside keys. Lines starting
//! with `#` are comments.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub fn escape(s: &str) -> String {
    escape_with(s, false)
}

fn escape_with(s: &str, map_key: bool) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            ',' if map_key => out.push_str("\\c"),
            '=' if map_key => out.push_str("\\e"),
            c => out.push(c),
        }
    }
    out
}

/// Reverses [`escape`] and the map-key escapes. Unknown escapes are an error.
pub fn unescape(s: &str) -> std::result::Result<String, String> {
    if !s.contains('\\') {
        return Ok(s.to_string());
    }
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('c') => out.push(','),
            Some('e') => out.push('='),
            Some(other) => return Err(format!("unknown escape \\{other}")),
            None => return Err("dangling backslash".to_string()),
        }
    }
    Ok(out)
}

/// Encodes `(key, count)` pairs as `key=count,key=count`; `-` when empty.
pub fn encode_counts<'a, I, V>(items: I) -> String
where
    I: IntoIterator<Item = (&'a str, V)>,
    V: std::fmt::Display,
{
    let mut out = String::new();
    for (k, v) in items {
        if !out.is_empty() {
            out.push(',');
        }
        out.push_str(&escape_with(k, true));
        out.push('=');
        out.push_str(&v.to_string());
    }
    if out.is_empty() {
        out.push('-');
    }
    out
}

pub fn decode_counts<V: std::str::FromStr>(
    field: &str,
    line: usize,
) -> Result<Vec<(String, V)>> {
    if field == "-" || field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|item| {
            let (k, v) = item
                .rsplit_once('=')
                .ok_or_else(|| Error::parse(line, format!("bad map item {item:?}")))?;
            let key = unescape(k).map_err(|e| Error::parse(line, e))?;
            let value = v
                .parse()
                .map_err(|_| Error::parse(line, format!("bad count {v:?}")))?;
            Ok((key, value))
        })
        .collect()
}

pub fn parse_field<T: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid {name} {field:?}")))
}

/// Iterates over `(line_number, line)` of a file, skipping blank and `#` lines.
pub fn read_records(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

/// Records of an in-memory text, same rules as [`read_records`].
pub fn text_records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// Writes a file atomically enough for our purposes: buffer everything, then write.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(contents.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Splits a record into exactly `n` tab-separated fields.
pub fn split_fields(line: &str, n: usize, lineno: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != n {
        return Err(Error::parse(
            lineno,
            format!("expected {n} fields, found {}", fields.len()),
        ));
    }
    Ok(fields)
}
