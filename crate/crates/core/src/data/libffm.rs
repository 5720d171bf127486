//! Reader and writer for the `label field:feature:value` interchange format.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::dataset::{Dataset, Instance, Label};
use crate::error::{Error, Result};

/// Parses one line into its label and `(field, feature)` pairs.
///
/// Values must be 1: every active feature is a one-hot indicator.
pub fn parse_libffm_line(line: &str, n: usize) -> Result<(Label, Vec<(u32, u32)>)> {
    let parse_err = |message: String| Error::Parse { line: 0, message };
    let mut tokens = line.split_ascii_whitespace();
    let label = tokens
        .next()
        .ok_or_else(|| parse_err("empty line".into()))
        .and_then(|t| Label::parse(t).map_err(|e| parse_err(e.to_string())))?;
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for token in tokens {
        let mut parts = token.split(':');
        let (Some(field), Some(feature), Some(value), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(parse_err(format!("malformed token {token:?}")));
        };
        let field: u32 = field
            .parse()
            .map_err(|_| parse_err(format!("bad field index in {token:?}")))?;
        let feature: u32 = feature
            .parse()
            .map_err(|_| parse_err(format!("bad feature index in {token:?}")))?;
        match value.parse::<f64>() {
            Ok(1.0) => {}
            _ => return Err(parse_err(format!("value must be 1 in {token:?}"))),
        }
        if field as usize >= n {
            return Err(parse_err(format!("field {field} out of range for n = {n}")));
        }
        if pairs.iter().any(|&(f, _)| f == field) {
            return Err(parse_err(format!("duplicate field {field}")));
        }
        pairs.push((field, feature));
    }
    Ok((label, pairs))
}

/// Formats an instance as one interchange line (no trailing newline).
pub fn format_libffm_line(inst: &Instance) -> String {
    let label = if inst.label.is_positive() { "1" } else { "0" };
    let mut line = String::from(label);
    for (field, id) in inst.active.iter().enumerate() {
        line.push_str(&format!(" {field}:{id}:1"));
    }
    line
}

/// Builds an instance from parsed pairs, requiring every field exactly once.
pub fn instance_from_pairs(label: Label, pairs: &[(u32, u32)], n: usize) -> Result<Instance> {
    let mut active = vec![u32::MAX; n];
    for &(field, feature) in pairs {
        active[field as usize] = feature;
    }
    if let Some(missing) = active.iter().position(|&id| id == u32::MAX) {
        return Err(Error::Data(format!("no active feature for field {missing}")));
    }
    Ok(Instance::new(label, active))
}

/// Label and `(field, feature)` pairs of one line.
pub type RawLine = (Label, Vec<(u32, u32)>);

/// Reads raw lines without knowing `n` or `m` in advance.
///
/// Returns each line's label and pairs together with the largest field and
/// feature index seen.
pub fn scan_libffm(path: &Path) -> Result<(Vec<RawLine>, usize, usize)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let (mut n, mut m) = (0usize, 0usize);
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (label, pairs) = parse_libffm_line(&line, usize::MAX >> 1).map_err(|e| with_line(e, lineno + 1))?;
        for &(f, j) in &pairs {
            n = n.max(f as usize + 1);
            m = m.max(j as usize + 1);
        }
        rows.push((label, pairs));
    }
    Ok((rows, n, m))
}

fn with_line(err: Error, line: usize) -> Error {
    match err {
        Error::Parse { message, .. } => Error::Parse { line, message },
        other => other,
    }
}

/// Reads a whole interchange file into a dataset over `n` fields and `m` features.
pub fn read_libffm(path: &Path, n: usize, m: usize) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut instances = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (label, pairs) = parse_libffm_line(&line, n).map_err(|e| with_line(e, lineno + 1))?;
        let inst = instance_from_pairs(label, &pairs, n).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        instances.push(inst);
    }
    Dataset::new(n, m, instances).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn write_libffm<'a>(path: &Path, instances: impl IntoIterator<Item = &'a Instance>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for inst in instances {
        writeln!(out, "{}", format_libffm_line(inst)).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
