//! Plain-text mesh format, exact round trip.
//!
//! ```text
//! torevac-mesh 1
//! outer <cx> <cy> <radius>
//! nodes <N>
//! <x> <y>            (N lines)
//! triangles <M>
//! <i> <j> <k>        (M lines)
//! boundary_edges <B>
//! <a> <b> <GAMMA_E|GAMMA_P>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::MeshError;
use crate::geometry::{Circle, Point};

use super::{BoundaryEdge, LoopTag, Mesh, NodeTag};

pub fn save_mesh(path: &Path, mesh: &Mesh) -> Result<(), MeshError> {
    let mut text = String::from("torevac-mesh 1\n");
    let c = mesh.outer_circle;
    let _ = writeln!(text, "outer {} {} {}", c.center.x, c.center.y, c.radius);
    let _ = writeln!(text, "nodes {}", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(text, "{} {}", p.x, p.y);
    }
    let _ = writeln!(text, "triangles {}", mesh.triangles.len());
    for t in &mesh.triangles {
        let _ = writeln!(text, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(text, "boundary_edges {}", mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let _ = writeln!(text, "{} {} {}", e.a, e.b, e.tag.as_str());
    }
    std::fs::write(path, text).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_mesh(path: &Path) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_mesh(&text).map_err(|(line, reason)| MeshError::BadFile {
        path: path.to_path_buf(),
        line,
        reason,
    })
}

/// Parses the mesh format; errors carry the 1-based line number.
pub fn parse_mesh(text: &str) -> Result<Mesh, (usize, String)> {
    let mut lines = text.lines().enumerate();
    let mut next_line = || -> Result<(usize, &str), (usize, String)> {
        for (idx, raw) in lines.by_ref() {
            let s = raw.trim();
            if !s.is_empty() {
                return Ok((idx + 1, s));
            }
        }
        Err((0, "unexpected end of file".into()))
    };

    let (ln, header) = next_line()?;
    if header != "torevac-mesh 1" {
        return Err((ln, format!("bad header '{header}'")));
    }

    let (ln, outer) = next_line()?;
    let parts: Vec<&str> = outer.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "outer" {
        return Err((ln, "expected 'outer <cx> <cy> <radius>'".into()));
    }
    let fnum = |s: &str, ln: usize| -> Result<f64, (usize, String)> {
        let v: f64 = s
            .parse()
            .map_err(|_| (ln, format!("cannot parse number '{s}'")))?;
        if !v.is_finite() {
            return Err((ln, format!("non-finite number '{s}'")));
        }
        Ok(v)
    };
    let circle = Circle::new(
        Point::new(fnum(parts[1], ln)?, fnum(parts[2], ln)?),
        fnum(parts[3], ln)?,
    );
    if circle.radius <= 0.0 {
        return Err((ln, format!("outer radius {} not positive", circle.radius)));
    }

    let count_after = |s: &str, key: &str, ln: usize| -> Result<usize, (usize, String)> {
        let mut it = s.split_whitespace();
        if it.next() != Some(key) {
            return Err((ln, format!("expected '{key} <count>'")));
        }
        let c: usize = it
            .next()
            .ok_or((ln, format!("missing count after '{key}'")))?
            .parse()
            .map_err(|_| (ln, format!("bad count after '{key}'")))?;
        if it.next().is_some() {
            return Err((ln, format!("trailing tokens after '{key}'")));
        }
        Ok(c)
    };

    let (ln, s) = next_line()?;
    let n_nodes = count_after(s, "nodes", ln)?;
    if n_nodes > 50_000_000 {
        return Err((ln, format!("implausible node count {n_nodes}")));
    }
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (ln, s) = next_line()?;
        let p: Vec<&str> = s.split_whitespace().collect();
        if p.len() != 2 {
            return Err((ln, "expected '<x> <y>'".into()));
        }
        nodes.push(Point::new(fnum(p[0], ln)?, fnum(p[1], ln)?));
    }

    let (ln, s) = next_line()?;
    let n_tris = count_after(s, "triangles", ln)?;
    if n_tris > 100_000_000 {
        return Err((ln, format!("implausible triangle count {n_tris}")));
    }
    let mut triangles = Vec::with_capacity(n_tris);
    for _ in 0..n_tris {
        let (ln, s) = next_line()?;
        let p: Vec<&str> = s.split_whitespace().collect();
        if p.len() != 3 {
            return Err((ln, "expected '<i> <j> <k>'".into()));
        }
        let mut tri = [0usize; 3];
        for (slot, tok) in tri.iter_mut().zip(&p) {
            *slot = tok
                .parse()
                .map_err(|_| (ln, format!("bad index '{tok}'")))?;
            if *slot >= n_nodes {
                return Err((ln, format!("index {slot} out of range (nodes {n_nodes})")));
            }
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err((ln, "degenerate triangle (repeated index)".into()));
        }
        triangles.push(tri);
    }

    let (ln, s) = next_line()?;
    let n_edges = count_after(s, "boundary_edges", ln)?;
    if n_edges > 100_000_000 {
        return Err((ln, format!("implausible edge count {n_edges}")));
    }
    let mut boundary_edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let (ln, s) = next_line()?;
        let p: Vec<&str> = s.split_whitespace().collect();
        if p.len() != 3 {
            return Err((ln, "expected '<a> <b> <TAG>'".into()));
        }
        let a: usize = p[0]
            .parse()
            .map_err(|_| (ln, format!("bad index '{}'", p[0])))?;
        let b: usize = p[1]
            .parse()
            .map_err(|_| (ln, format!("bad index '{}'", p[1])))?;
        if a >= n_nodes || b >= n_nodes {
            return Err((ln, "edge index out of range".into()));
        }
        let tag = match p[2] {
            "GAMMA_E" => LoopTag::GammaE,
            "GAMMA_P" => LoopTag::GammaP,
            other => return Err((ln, format!("unknown boundary tag '{other}'"))),
        };
        boundary_edges.push(BoundaryEdge { a, b, tag });
    }

    // node tags are implied by the boundary edges
    let mut node_tags = vec![NodeTag::Interior; n_nodes];
    for e in &boundary_edges {
        let t = match e.tag {
            LoopTag::GammaE => NodeTag::GammaE,
            LoopTag::GammaP => NodeTag::GammaP,
        };
        node_tags[e.a] = t;
        node_tags[e.b] = t;
    }

    Ok(Mesh {
        nodes,
        triangles,
        boundary_edges,
        node_tags,
        outer_circle: circle,
    })
}
