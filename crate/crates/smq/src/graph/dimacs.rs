//! Readers for the 9th DIMACS shortest-path challenge formats: `.gr` arc
//! files and `.co` coordinate files. Vertex ids are 1-indexed on disk and
//! mapped to 0-indexed here.

use super::{Graph, GraphError};
use std::io::BufRead;
use std::path::Path;

fn parse_err(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses a `.gr` file: `c` comments, one `p sp <V> <E>` problem line, and
/// `E` arc lines `a <from> <to> <weight>`.
pub fn parse_gr(reader: impl BufRead) -> Result<Graph, GraphError> {
    let mut header: Option<(usize, usize)> = None;
    let mut arcs: Vec<(u32, u32, u32)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let mut fields = line.split_whitespace();
        match fields.next() {
            None | Some("c") => continue,
            Some("p") => {
                if header.is_some() {
                    return Err(parse_err(lineno, "duplicate problem line"));
                }
                if fields.next() != Some("sp") {
                    return Err(parse_err(lineno, "expected problem line `p sp <V> <E>`"));
                }
                let v: usize = next_num(&mut fields, lineno, "vertex count")?;
                let e: usize = next_num(&mut fields, lineno, "arc count")?;
                if v == 0 {
                    return Err(GraphError::ZeroSize);
                }
                header = Some((v, e));
                arcs.reserve(e);
            }
            Some("a") => {
                let (v, _) = header.ok_or(GraphError::MissingHeader)?;
                let from: usize = next_num(&mut fields, lineno, "arc source")?;
                let to: usize = next_num(&mut fields, lineno, "arc target")?;
                let w: u32 = next_num(&mut fields, lineno, "arc weight")?;
                for id in [from, to] {
                    if id == 0 || id > v {
                        return Err(GraphError::VertexOutOfRange { vertex: id, max: v });
                    }
                }
                arcs.push((from as u32 - 1, to as u32 - 1, w));
            }
            Some(other) => {
                return Err(parse_err(lineno, format!("unknown line type {other:?}")));
            }
        }
    }
    let (v, e) = header.ok_or(GraphError::MissingHeader)?;
    if arcs.len() != e {
        return Err(GraphError::ArcCountMismatch {
            declared: e,
            found: arcs.len(),
        });
    }
    Ok(Graph::from_arcs(v, &arcs))
}

/// Parses a `.co` file: `p aux sp co <V>` then `v <id> <x> <y>` lines.
/// Returns one `(x, y)` pair per vertex; vertices without a line get (0, 0).
pub fn parse_co(reader: impl BufRead) -> Result<Vec<(i32, i32)>, GraphError> {
    let mut coords: Option<Vec<(i32, i32)>> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let mut fields = line.split_whitespace();
        match fields.next() {
            None | Some("c") => continue,
            Some("p") => {
                let rest: Vec<&str> = fields.collect();
                let v: usize = match rest.as_slice() {
                    ["aux", "sp", "co", v] => v
                        .parse()
                        .map_err(|_| parse_err(lineno, "bad vertex count"))?,
                    _ => return Err(parse_err(lineno, "expected `p aux sp co <V>`")),
                };
                if v == 0 {
                    return Err(GraphError::ZeroSize);
                }
                coords = Some(vec![(0, 0); v]);
            }
            Some("v") => {
                let coords = coords.as_mut().ok_or(GraphError::MissingHeader)?;
                let id: usize = next_num(&mut fields, lineno, "vertex id")?;
                let x: i32 = next_num(&mut fields, lineno, "x coordinate")?;
                let y: i32 = next_num(&mut fields, lineno, "y coordinate")?;
                if id == 0 || id > coords.len() {
                    return Err(GraphError::VertexOutOfRange {
                        vertex: id,
                        max: coords.len(),
                    });
                }
                coords[id - 1] = (x, y);
            }
            Some(other) => {
                return Err(parse_err(lineno, format!("unknown line type {other:?}")));
            }
        }
    }
    coords.ok_or(GraphError::MissingHeader)
}

fn next_num<T: std::str::FromStr>(
    fields: &mut std::str::SplitWhitespace<'_>,
    lineno: usize,
    what: &str,
) -> Result<T, GraphError> {
    fields
        .next()
        .ok_or_else(|| parse_err(lineno, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(lineno, format!("malformed {what}")))
}

pub fn load_gr(path: &Path) -> Result<Graph, GraphError> {
    let file = std::fs::File::open(path)?;
    parse_gr(std::io::BufReader::new(file))
}

pub fn load_co(path: &Path) -> Result<Vec<(i32, i32)>, GraphError> {
    let file = std::fs::File::open(path)?;
    parse_co(std::io::BufReader::new(file))
}
