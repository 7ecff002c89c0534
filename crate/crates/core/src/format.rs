//! Plain-text file formats for point sets, base graphs and shortcut tables.
//!
//! Readers skip blank lines and lines starting with `#`, so files may carry
//! a provenance header. Coordinates are written in shortest round-trip form
//! and therefore reload bit-exactly.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::augment::ShortcutTable;
use crate::basegraph::{BaseGraph, Geometry};
use crate::error::{Error, Result};
use crate::population::PointSet;

/// Non-comment lines with their 1-based line numbers.
fn content_lines<R: BufRead>(source: R) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            out.push((i + 1, t.to_string()));
        }
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::format(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| Error::format(line, format!("bad {what} {tok:?}")))
}

fn parse_count(lines: &[(usize, String)], idx: usize) -> Result<(usize, usize)> {
    let Some((line, text)) = lines.get(idx) else {
        return Err(Error::format(1, "empty file"));
    };
    let mut it = text.split_whitespace();
    if it.next() != Some("n") {
        return Err(Error::format(*line, "expected `n <count>` header"));
    }
    Ok((*line, parse_field(*line, it.next(), "vertex count")?))
}

fn write_coords(out: &mut String, points: &PointSet) {
    for (x, y) in points.positions() {
        let _ = writeln!(out, "{x} {y}");
    }
}

fn read_coords(lines: &[(usize, String)], n: usize) -> Result<Vec<(f64, f64)>> {
    if lines.len() < n {
        let last = lines.last().map_or(1, |l| l.0);
        return Err(Error::format(last, format!("expected {n} coordinate lines, found {}", lines.len())));
    }
    lines[..n]
        .iter()
        .map(|(line, text)| {
            let mut it = text.split_whitespace();
            let x = parse_field(*line, it.next(), "x coordinate")?;
            let y = parse_field(*line, it.next(), "y coordinate")?;
            if it.next().is_some() {
                return Err(Error::format(*line, "trailing data after coordinates"));
            }
            Ok((x, y))
        })
        .collect()
}

pub fn points_to_text(points: &PointSet) -> String {
    let mut out = format!("n {}\n", points.len());
    write_coords(&mut out, points);
    out
}

pub fn read_points<R: BufRead>(source: R) -> Result<PointSet> {
    let lines = content_lines(source)?;
    let (header, n) = parse_count(&lines, 0)?;
    let coords = read_coords(&lines[1..], n)?;
    if lines.len() > n + 1 {
        return Err(Error::format(lines[n + 1].0, "more coordinate lines than announced"));
    }
    PointSet::from_positions(&coords).map_err(|e| Error::format(header, e.to_string()))
}

/// `n <count>`, then coordinates (continuum) or a `lattice` line, then one
/// `i j` edge per line.
pub fn graph_to_text(g: &BaseGraph) -> String {
    let mut out = format!("n {}\n", g.len());
    match g.geometry() {
        Geometry::Continuum(p) => write_coords(&mut out, p),
        Geometry::Lattice { dims, cyclic } => {
            out.push_str("lattice");
            for (d, c) in dims.iter().zip(cyclic) {
                let _ = write!(out, " {d}{}", if *c { "c" } else { "" });
            }
            out.push('\n');
        }
    }
    for (i, j) in g.edges() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

pub fn read_graph<R: BufRead>(source: R) -> Result<BaseGraph> {
    let lines = content_lines(source)?;
    let (header, n) = parse_count(&lines, 0)?;
    let rest = &lines[1..];
    let (geometry, edge_lines) = match rest.first() {
        Some((line, text)) if text.starts_with("lattice") => {
            let mut dims = Vec::new();
            let mut cyclic = Vec::new();
            for tok in text.split_whitespace().skip(1) {
                let (num, wrap) = match tok.strip_suffix('c') {
                    Some(num) => (num, true),
                    None => (tok, false),
                };
                dims.push(parse_field::<usize>(*line, Some(num), "lattice side")?);
                cyclic.push(wrap);
            }
            (Geometry::Lattice { dims, cyclic }, &rest[1..])
        }
        _ => {
            let coords = read_coords(rest, n)?;
            let points = PointSet::from_positions(&coords).map_err(|e| Error::format(header, e.to_string()))?;
            (Geometry::Continuum(points), &rest[n..])
        }
    };
    let edges = edge_lines
        .iter()
        .map(|(line, text)| {
            let mut it = text.split_whitespace();
            let i: u32 = parse_field(*line, it.next(), "edge endpoint")?;
            let j: u32 = parse_field(*line, it.next(), "edge endpoint")?;
            if it.next().is_some() {
                return Err(Error::format(*line, "trailing data after edge"));
            }
            Ok((i, j))
        })
        .collect::<Result<Vec<_>>>()?;
    let g = BaseGraph::from_edges(n, &edges, geometry).map_err(|e| Error::format(header, e.to_string()))?;
    g.validate().map_err(|e| Error::format(header, e.to_string()))?;
    Ok(g)
}

/// `n <count> outdeg <d>`, then `source target` per slot.
pub fn shortcuts_to_text(table: &ShortcutTable) -> String {
    let mut out = format!("n {} outdeg {}\n", table.len(), table.out_degree());
    for (s, t) in table.pairs() {
        let _ = writeln!(out, "{s} {t}");
    }
    out
}

pub fn read_shortcuts<R: BufRead>(source: R) -> Result<ShortcutTable> {
    let lines = content_lines(source)?;
    let Some((hline, htext)) = lines.first() else {
        return Err(Error::format(1, "empty file"));
    };
    let mut it = htext.split_whitespace();
    if it.next() != Some("n") {
        return Err(Error::format(*hline, "expected `n <count> outdeg <d>` header"));
    }
    let n: usize = parse_field(*hline, it.next(), "vertex count")?;
    if it.next() != Some("outdeg") {
        return Err(Error::format(*hline, "expected `outdeg <d>` in header"));
    }
    let d: usize = parse_field(*hline, it.next(), "out-degree")?;
    if d == 0 {
        return Err(Error::format(*hline, "out-degree must be positive"));
    }
    let body = &lines[1..];
    if body.len() != n * d {
        let last = lines.last().map_or(1, |l| l.0);
        return Err(Error::format(last, format!("expected {} shortcut lines, found {}", n * d, body.len())));
    }
    let mut targets = Vec::with_capacity(n * d);
    for (k, (line, text)) in body.iter().enumerate() {
        let mut it = text.split_whitespace();
        let s: usize = parse_field(*line, it.next(), "shortcut source")?;
        let t: u32 = parse_field(*line, it.next(), "shortcut target")?;
        if s != k / d {
            return Err(Error::format(*line, format!("shortcut lines must be grouped by source; expected source {}", k / d)));
        }
        if t as usize >= n {
            return Err(Error::format(*line, format!("target {t} out of range")));
        }
        targets.push(t);
    }
    ShortcutTable::from_targets(n, d, targets)
}
