//! Plain-text dataset loaders.
//!
//! Edge list: one `i j` pair of 0-based indices per line, whitespace
//! separated, `#` starts a comment line. Attribute file: one node per line
//! of `d` reals, optionally preceded by an `n d` header. Label file: one
//! integer per line.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};
use std::path::Path;

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(text.lines().map(str::to_string).collect())
}

fn parse_err(path: &Path, line: usize, detail: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        detail: detail.into(),
    }
}

/// Load raw edge pairs; duplicate handling happens at graph construction.
pub fn load_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (lineno, line) in read_lines(path)?.iter().enumerate() {
        let line_number = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(
                path,
                line_number,
                format!("expected two node indices, found {} field(s)", fields.len()),
            ));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(path, line_number, format!("invalid node index '{s}'")))
        };
        edges.push((parse(fields[0])?, parse(fields[1])?));
    }
    Ok(edges)
}

/// Load an attribute matrix, accepting an optional `n d` header line.
pub fn load_attributes<F: Real>(path: &Path) -> Result<Tensor<F>> {
    let lines = read_lines(path)?;
    let rows: Vec<(usize, Vec<&str>)> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, f)| !f.is_empty())
        .collect();
    if rows.is_empty() {
        return Err(parse_err(path, 1, "attribute file is empty"));
    }

    // Header detection: a first line of exactly two nonnegative integers
    // that correctly announces the remaining line count.
    let mut start = 0;
    let mut expected: Option<(usize, usize)> = None;
    if rows[0].1.len() == 2 {
        if let (Ok(n), Ok(d)) = (rows[0].1[0].parse::<usize>(), rows[0].1[1].parse::<usize>()) {
            if rows.len() - 1 == n && rows.get(1).map_or(d == 0, |r| r.1.len() == d) {
                start = 1;
                expected = Some((n, d));
            }
        }
    }

    let body = &rows[start..];
    let width = expected.map_or_else(|| body.first().map_or(0, |r| r.1.len()), |(_, d)| d);
    if width == 0 {
        return Err(parse_err(path, body.first().map_or(1, |r| r.0), "no attribute values"));
    }
    let mut data = Vec::with_capacity(body.len() * width);
    for (line_number, fields) in body {
        if fields.len() != width {
            return Err(parse_err(
                path,
                *line_number,
                format!("expected {width} values, found {}", fields.len()),
            ));
        }
        for field in fields {
            let v: f64 = field.parse().map_err(|_| {
                parse_err(path, *line_number, format!("invalid number '{field}'"))
            })?;
            if !v.is_finite() {
                return Err(parse_err(path, *line_number, format!("non-finite value '{field}'")));
            }
            data.push(F::of(v));
        }
    }
    Tensor::from_vec(body.len(), width, data)
}

/// Load one cluster label per line.
pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (lineno, line) in read_lines(path)?.iter().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let v = trimmed
            .parse::<usize>()
            .map_err(|_| parse_err(path, lineno + 1, format!("invalid label '{trimmed}'")))?;
        labels.push(v);
    }
    Ok(labels)
}
