//! CSV and JSON readers and writers.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::StraightLineTree;
use crate::graph::Edge;
use crate::mergegram::Diagram;

/// 17 significant digits, `inf` for positive infinity.
pub fn fmt_float(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

/// Parses a float, accepting `inf` and `-inf`.
pub fn parse_float(s: &str) -> Result<f64> {
    let s = s.trim();
    match s {
        "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
        "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("not a number: {s:?}"))),
    }
}

/// Rows of floats from CSV text; with `header` the first row is skipped.
pub fn parse_rows(text: &str, header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = rec
            .iter()
            .map(parse_float)
            .collect::<Result<Vec<f64>>>()
            .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_rows(path: &Path, header: bool) -> Result<Vec<Vec<f64>>> {
    parse_rows(&std::fs::read_to_string(path)?, header)
}

/// Point cloud: one point per row, equal dimensions, finite values.
pub fn read_points(path: &Path, header: bool) -> Result<Vec<Vec<f64>>> {
    let rows = read_rows(path, header)?;
    if let Some(first) = rows.first() {
        if rows.iter().any(|r| r.len() != first.len()) {
            return Err(Error::Parse("rows have different lengths".into()));
        }
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Parse("coordinates must be finite".into()));
    }
    Ok(rows)
}

/// Rows as CSV text.
pub fn format_rows(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().map(|&x| fmt_float(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Diagram from `birth,death` rows.
pub fn parse_diagram(text: &str, header: bool) -> Result<Diagram> {
    let rows = parse_rows(text, header)?;
    let mut pairs = Vec::with_capacity(rows.len());
    for r in rows {
        if r.len() != 2 {
            return Err(Error::Parse("diagram rows need two values".into()));
        }
        pairs.push((r[0], r[1]));
    }
    Diagram::new(pairs).map_err(|e| Error::Parse(e.to_string()))
}

pub fn format_diagram(d: &Diagram) -> String {
    let mut out = String::from("birth,death\n");
    for &(b, dd) in d.pairs() {
        let _ = writeln!(out, "{},{}", fmt_float(b), fmt_float(dd));
    }
    out
}

pub fn format_edges(edges: &[Edge]) -> String {
    let mut out = String::from("a,b,length\n");
    for e in edges {
        let _ = writeln!(out, "{},{},{}", e.a, e.b, fmt_float(e.length));
    }
    out
}

/// Tree as JSON.
pub fn tree_to_json(t: &StraightLineTree) -> Result<String> {
    serde_json::to_string_pretty(t).map_err(|e| Error::Parse(e.to_string()))
}

pub fn tree_from_json(text: &str) -> Result<StraightLineTree> {
    let t: StraightLineTree =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    StraightLineTree::new(t.vertices, t.edges).map_err(|e| Error::Parse(e.to_string()))
}
