//! The ".el" edge-list text format and the ".sets" sidecar.
//!
//! Format: first line `n m` (two base-10 integers, one space), then exactly
//! `m` lines `u v` with `0 <= u < v < n`, newline-terminated, ASCII only.
//! Serialization emits edges in lexicographic order, so
//! `parse(serialize(g)) == g` bit-exactly.

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet};
use std::fmt::Write as _;

pub fn serialize(g: &Graph) -> String {
    let edges = g.edges();
    let mut out = String::with_capacity(16 + edges.len() * 12);
    let _ = writeln!(out, "{} {}", g.n(), edges.len());
    for (u, v) in edges {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn parse(text: &str) -> Result<Graph> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::InputFormat {
        line: 1,
        msg: "missing header line".into(),
    })?;
    let mut parts = header.split(' ');
    let n: usize = parse_int(parts.next(), 1, "n")?;
    let m: usize = parse_int(parts.next(), 1, "m")?;
    if parts.next().is_some() {
        return Err(Error::InputFormat {
            line: 1,
            msg: "header must be exactly \"n m\"".into(),
        });
    }
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (idx, line) = lines.next().ok_or(Error::InputFormat {
            line: m + 1,
            msg: format!("expected {m} edge lines"),
        })?;
        let lineno = idx + 1;
        let mut parts = line.split(' ');
        let u: u32 = parse_int(parts.next(), lineno, "u")? as u32;
        let v: u32 = parse_int(parts.next(), lineno, "v")? as u32;
        if parts.next().is_some() {
            return Err(Error::InputFormat {
                line: lineno,
                msg: "edge line must be exactly \"u v\"".into(),
            });
        }
        edges.push((u, v));
    }
    if let Some((idx, line)) = lines.next() {
        if !line.is_empty() {
            return Err(Error::InputFormat {
                line: idx + 1,
                msg: "trailing content after edge list".into(),
            });
        }
    }
    Graph::from_edge_list(n, &edges)
}

fn parse_int(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::InputFormat {
        line,
        msg: format!("missing field {what}"),
    })?;
    tok.parse().map_err(|_| Error::InputFormat {
        line,
        msg: format!("field {what} is not a base-10 integer: {tok:?}"),
    })
}

pub fn read_graph(path: &std::path::Path) -> Result<Graph> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn write_graph(path: &std::path::Path, g: &Graph) -> Result<()> {
    std::fs::write(path, serialize(g))?;
    Ok(())
}

/// Serializes named vertex sets, one per line: `NAME: v0 v1 v2 ...`.
pub fn serialize_sets(sets: &[(String, VertexSet)]) -> String {
    let mut out = String::new();
    for (name, set) in sets {
        let _ = write!(out, "{name}:");
        for v in set.iter() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_sets(text: &str, n: usize) -> Result<Vec<(String, VertexSet)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let (name, rest) = line.split_once(':').ok_or_else(|| Error::InputFormat {
            line: lineno,
            msg: "set line must be \"NAME: v0 v1 ...\"".into(),
        })?;
        let mut set = VertexSet::new(n);
        for tok in rest.split_whitespace() {
            let v: u32 = tok.parse().map_err(|_| Error::InputFormat {
                line: lineno,
                msg: format!("bad vertex id {tok:?}"),
            })?;
            if v as usize >= n {
                return Err(Error::InputFormat {
                    line: lineno,
                    msg: format!("vertex {v} out of range for n = {n}"),
                });
            }
            set.insert(v);
        }
        out.push((name.trim().to_string(), set));
    }
    Ok(out)
}

pub fn read_sets(path: &std::path::Path, n: usize) -> Result<Vec<(String, VertexSet)>> {
    parse_sets(&std::fs::read_to_string(path)?, n)
}

pub fn write_sets(path: &std::path::Path, sets: &[(String, VertexSet)]) -> Result<()> {
    std::fs::write(path, serialize_sets(sets))?;
    Ok(())
}
