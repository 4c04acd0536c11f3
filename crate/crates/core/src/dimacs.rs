//! DIMACS max-flow text format.

use crate::error::{Error, Result};
use crate::graph::CapGraph;

pub const MAX_CAP: i64 = 1 << 62;

/// Parse a DIMACS max-flow problem; returns the graph with 0-based ids and `(s, t)`.
/// Arcs with capacity 0 are dropped.
pub fn parse_dimacs(bytes: &[u8]) -> Result<(CapGraph, usize, usize)> {
    let text = String::from_utf8_lossy(bytes);
    let mut graph: Option<CapGraph> = None;
    let mut s: Option<usize> = None;
    let mut t: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut tok = raw.split_whitespace();
        let Some(kind) = tok.next() else { continue };
        match kind {
            "c" => continue,
            "p" => {
                if graph.is_some() {
                    return Err(header(line, "second problem line"));
                }
                let fields: Vec<&str> = tok.collect();
                if fields.len() != 3 || fields[0] != "max" {
                    return Err(header(line, "expected `p max <n> <m>`"));
                }
                let n: usize = fields[1].parse().map_err(|_| header(line, "bad vertex count"))?;
                let _m: usize = fields[2].parse().map_err(|_| header(line, "bad edge count"))?;
                graph = Some(CapGraph::new(n));
            }
            "n" => {
                let g = graph.as_ref().ok_or_else(|| header(line, "node line before problem line"))?;
                let fields: Vec<&str> = tok.collect();
                if fields.len() != 2 {
                    return Err(malformed(line, "expected `n <id> s|t`"));
                }
                let v = vertex(fields[0], g.n, line)?;
                match fields[1] {
                    "s" => {
                        if s.replace(v).is_some() {
                            return Err(Error::DuplicateTerminal { line, role: "source" });
                        }
                    }
                    "t" => {
                        if t.replace(v).is_some() {
                            return Err(Error::DuplicateTerminal { line, role: "sink" });
                        }
                    }
                    other => return Err(malformed(line, &format!("unknown node role `{other}`"))),
                }
            }
            "a" => {
                let g = graph.as_mut().ok_or_else(|| header(line, "arc line before problem line"))?;
                let fields: Vec<&str> = tok.collect();
                if fields.len() != 3 {
                    return Err(malformed(line, "expected `a <u> <v> <cap>`"));
                }
                let u = vertex(fields[0], g.n, line)?;
                let v = vertex(fields[1], g.n, line)?;
                let cap: i64 = fields[2].parse().map_err(|_| malformed(line, "bad capacity"))?;
                if cap < 0 {
                    return Err(Error::NegativeCapacity { line, cap });
                }
                if cap > MAX_CAP {
                    return Err(Error::Overflow(format!("line {line}: capacity {cap} exceeds 2^62")));
                }
                if cap > 0 {
                    g.add_edge(u, v, cap);
                }
            }
            other => return Err(malformed(line, &format!("unknown line type `{other}`"))),
        }
    }
    let g = graph.ok_or_else(|| header(0, "missing problem line"))?;
    let s = s.ok_or(Error::MissingTerminal("source"))?;
    let t = t.ok_or(Error::MissingTerminal("sink"))?;
    Ok((g, s, t))
}

pub fn serialize_dimacs(g: &CapGraph, s: usize, t: usize) -> String {
    let mut out = format!("p max {} {}\nn {} s\nn {} t\n", g.n, g.m(), s + 1, t + 1);
    for e in &g.edges {
        out.push_str(&format!("a {} {} {}\n", e.tail + 1, e.head + 1, e.cap));
    }
    out
}

fn vertex(tok: &str, n: usize, line: usize) -> Result<usize> {
    let id: i64 = tok.parse().map_err(|_| malformed(line, &format!("bad vertex id `{tok}`")))?;
    if id < 1 || id as u64 > n as u64 {
        return Err(Error::VertexOutOfRange { line, id, n });
    }
    Ok(id as usize - 1)
}

fn header(line: usize, msg: &str) -> Error {
    Error::MalformedHeader { line, msg: msg.to_string() }
}

fn malformed(line: usize, msg: &str) -> Error {
    Error::MalformedLine { line, msg: msg.to_string() }
}
