//! Plain-text mesh files.
//!
//! ```text
//! NODES <n>
//! <index> <x> <y> <interior|outer|perforation>
//! TRIANGLES <m>
//! <index> <a> <b> <c> <coarse_parent>
//! EDGES <k>
//! <a> <b> <outer|perforation>
//! ```
//!
//! Whitespace-delimited ASCII with LF line endings. Coordinates are printed
//! with shortest round-trip formatting, so load(save(m)) is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::fine::{BoundaryEdge, EdgeMarker, FineMesh, NodeMarker};
use super::MeshError;
use crate::geometry::{signed_area2, Point};

pub fn save_mesh(mesh: &FineMesh, path: &Path) -> Result<(), MeshError> {
    let mut out = String::new();
    writeln!(out, "NODES {}", mesh.n_nodes()).unwrap();
    for (i, (p, m)) in mesh.nodes.iter().zip(&mesh.node_markers).enumerate() {
        let marker = match m {
            NodeMarker::Interior => "interior",
            NodeMarker::Outer => "outer",
            NodeMarker::Perforation => "perforation",
        };
        writeln!(out, "{} {} {} {}", i, p.x, p.y, marker).unwrap();
    }
    writeln!(out, "TRIANGLES {}", mesh.n_triangles()).unwrap();
    for (i, (t, parent)) in mesh.triangles.iter().zip(&mesh.coarse_parent).enumerate() {
        writeln!(out, "{} {} {} {} {}", i, t[0], t[1], t[2], parent).unwrap();
    }
    writeln!(out, "EDGES {}", mesh.boundary_edges.len()).unwrap();
    for e in &mesh.boundary_edges {
        let marker = match e.marker {
            EdgeMarker::Outer => "outer",
            EdgeMarker::Perforation => "perforation",
        };
        writeln!(out, "{} {} {}", e.a, e.b, marker).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineReader<'a> {
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (idx, line) in self.lines.by_ref() {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some((idx + 1, tokens));
            }
        }
        None
    }
}

fn malformed(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::MalformedMeshFile {
        line,
        message: message.into(),
    }
}

pub fn load_mesh(path: &Path) -> Result<FineMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    let mut reader = LineReader {
        lines: text.lines().enumerate(),
    };

    let (line, header) = reader
        .next_tokens()
        .ok_or_else(|| malformed(0, "empty file"))?;
    let n_nodes = parse_section_header(line, &header, "NODES")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut node_markers = Vec::with_capacity(n_nodes);
    for expect in 0..n_nodes {
        let (line, tok) = reader
            .next_tokens()
            .ok_or_else(|| malformed(0, "truncated node section"))?;
        if tok.len() != 4 {
            return Err(malformed(line, "expected: index x y marker"));
        }
        let idx: usize = parse(line, tok[0])?;
        if idx != expect {
            return Err(malformed(line, format!("expected node index {expect}")));
        }
        let x: f64 = parse(line, tok[1])?;
        let y: f64 = parse(line, tok[2])?;
        let marker = match tok[3] {
            "interior" => NodeMarker::Interior,
            "outer" => NodeMarker::Outer,
            "perforation" => NodeMarker::Perforation,
            other => return Err(malformed(line, format!("unknown node marker {other:?}"))),
        };
        nodes.push(Point::new(x, y));
        node_markers.push(marker);
    }

    let (line, header) = reader
        .next_tokens()
        .ok_or_else(|| malformed(0, "missing TRIANGLES section"))?;
    let n_tris = parse_section_header(line, &header, "TRIANGLES")?;
    let mut triangles = Vec::with_capacity(n_tris);
    let mut coarse_parent = Vec::with_capacity(n_tris);
    for expect in 0..n_tris {
        let (line, tok) = reader
            .next_tokens()
            .ok_or_else(|| malformed(0, "truncated triangle section"))?;
        if tok.len() != 5 {
            return Err(malformed(line, "expected: index a b c coarse_parent"));
        }
        let idx: usize = parse(line, tok[0])?;
        if idx != expect {
            return Err(malformed(line, format!("expected triangle index {expect}")));
        }
        let tri = [
            parse::<usize>(line, tok[1])?,
            parse::<usize>(line, tok[2])?,
            parse::<usize>(line, tok[3])?,
        ];
        for &v in &tri {
            if v >= nodes.len() {
                return Err(malformed(line, format!("triangle references missing node {v}")));
            }
        }
        let area2 = signed_area2(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
        if area2 <= 0.0 {
            return Err(malformed(line, "triangle has nonpositive area"));
        }
        triangles.push(tri);
        coarse_parent.push(parse::<usize>(line, tok[4])?);
    }

    let (line, header) = reader
        .next_tokens()
        .ok_or_else(|| malformed(0, "missing EDGES section"))?;
    let n_edges = parse_section_header(line, &header, "EDGES")?;
    let mut boundary_edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let (line, tok) = reader
            .next_tokens()
            .ok_or_else(|| malformed(0, "truncated edge section"))?;
        if tok.len() != 3 {
            return Err(malformed(line, "expected: a b marker"));
        }
        let a: usize = parse(line, tok[0])?;
        let b: usize = parse(line, tok[1])?;
        if a >= nodes.len() || b >= nodes.len() {
            return Err(malformed(line, "edge references missing node"));
        }
        let marker = match tok[2] {
            "outer" => EdgeMarker::Outer,
            "perforation" => EdgeMarker::Perforation,
            other => return Err(malformed(line, format!("unknown edge marker {other:?}"))),
        };
        boundary_edges.push(BoundaryEdge { a, b, marker });
    }

    Ok(FineMesh {
        nodes,
        triangles,
        node_markers,
        boundary_edges,
        coarse_parent,
    })
}

fn parse_section_header(line: usize, tokens: &[&str], name: &str) -> Result<usize, MeshError> {
    if tokens.len() != 2 || tokens[0] != name {
        return Err(malformed(line, format!("expected section header {name} <count>")));
    }
    parse(line, tokens[1])
}

fn parse<T: std::str::FromStr>(line: usize, token: &str) -> Result<T, MeshError> {
    token
        .parse()
        .map_err(|_| malformed(line, format!("cannot parse {token:?}")))
}
