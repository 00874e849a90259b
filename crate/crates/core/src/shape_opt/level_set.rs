//! Level-line extraction from P1 fields (marching triangles) and point
//! location for sampling fields along arbitrary polylines.

use std::collections::HashMap;

use crate::error::OptError;
use crate::fem::ScalarField;
use crate::geometry::{signed_area, ClosedCurve, Point};
use crate::mesh::Mesh;

/// Crossing points are keyed by the mesh edge carrying them, so segments
/// from adjacent triangles stitch exactly.
type EdgeKey = (usize, usize);

/// Extracts the closed level line {u = value} by per-triangle linear
/// interpolation. Exactly one loop is expected.
pub fn extract_level_set(
    mesh: &Mesh,
    u: &ScalarField,
    value: f64,
) -> Result<ClosedCurve, OptError> {
    let min = u.min();
    let max = u.max();
    if !(value > min && value < max) {
        return Err(OptError::LevelOutOfRange { value, min, max });
    }
    // nodes exactly at the level count as positive (deterministic tie-break)
    let side = |i: usize| u.values[i] >= value;
    let mut crossings: HashMap<EdgeKey, Point> = HashMap::new();
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for tri in &mesh.triangles {
        let mut cut_edges: Vec<EdgeKey> = Vec::with_capacity(2);
        for v in 0..3 {
            let (i, j) = (tri[v], tri[(v + 1) % 3]);
            if side(i) != side(j) {
                let key = (i.min(j), i.max(j));
                cut_edges.push(key);
                crossings.entry(key).or_insert_with(|| {
                    let t = (value - u.values[i]) / (u.values[j] - u.values[i]);
                    mesh.nodes[i].add(mesh.nodes[j].sub(mesh.nodes[i]).scale(t))
                });
            }
        }
        match cut_edges.len() {
            0 => {}
            2 => segments.push((cut_edges[0], cut_edges[1])),
            n => {
                return Err(OptError::LevelSetLoops { count: n });
            }
        }
    }
    if segments.is_empty() {
        return Err(OptError::LevelSetNoCrossing { value });
    }

    // stitch: each edge key should join exactly two segments
    let mut incident: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        incident.entry(seg.0).or_default().push(s);
        incident.entry(seg.1).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut loops: Vec<Vec<Point>> = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        let start_key = segments[start].0;
        let mut pts = Vec::new();
        let mut seg = start;
        let mut enter = start_key;
        let mut closed = false;
        loop {
            used[seg] = true;
            let exit = if segments[seg].0 == enter {
                segments[seg].1
            } else {
                segments[seg].0
            };
            pts.push(crossings[&exit]);
            if exit == start_key {
                closed = true;
                break;
            }
            let next = incident
                .get(&exit)
                .and_then(|list| list.iter().find(|s| !used[**s]))
                .copied();
            match next {
                Some(n) => {
                    seg = n;
                    enter = exit;
                }
                None => break,
            }
        }
        if !closed {
            // the chain ran into the boundary: not a closed level line
            return Err(OptError::LevelSetOpen { value });
        }
        loops.push(pts);
    }
    if loops.len() != 1 {
        return Err(OptError::LevelSetLoops { count: loops.len() });
    }
    let mut pts = loops.into_iter().next().unwrap();
    if signed_area(&pts) < 0.0 {
        pts.reverse();
    }
    ClosedCurve::new(pts).map_err(OptError::from)
}

/// Brute-force point location; returns the containing triangle, accepting
/// points within `tol` of an element in barycentric terms.
pub fn locate_point(mesh: &Mesh, p: Point, tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (pa, pb, pc) = (
            mesh.nodes[tri[0]],
            mesh.nodes[tri[1]],
            mesh.nodes[tri[2]],
        );
        let area2 = (pb.sub(pa)).cross(pc.sub(pa));
        let la = (pb.sub(p)).cross(pc.sub(p)) / area2;
        let lb = (pc.sub(p)).cross(pa.sub(p)) / area2;
        let lc = 1.0 - la - lb;
        let worst = la.min(lb).min(lc);
        if worst >= 0.0 {
            return Some(t);
        }
        if worst >= -tol {
            match best {
                Some((_, b)) if b >= worst => {}
                _ => best = Some((t, worst)),
            }
        }
    }
    best.map(|(t, _)| t)
}

/// Field value at an arbitrary point, or None when outside the mesh.
pub fn sample_field(mesh: &Mesh, u: &ScalarField, p: Point) -> Option<f64> {
    locate_point(mesh, p, 1e-9).map(|t| u.interpolate_in(mesh, t, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Circle;
    use crate::mesh::generate_mesh;

    fn radial_field(mesh: &Mesh) -> ScalarField {
        let center = mesh.outer_circle.center;
        ScalarField {
            values: mesh.nodes.iter().map(|p| p.dist(center)).collect(),
        }
    }

    #[test]
    fn level_set_of_distance_field_is_circle() {
        let outer = Circle::new(Point::new(2.42, 0.0), 0.92);
        let inner = ClosedCurve::circle(Circle::new(Point::new(2.42, 0.0), 0.4), 64).unwrap();
        let h = 0.04;
        let mesh = generate_mesh(outer, &inner, h).unwrap();
        let u = radial_field(&mesh);
        let level = 0.66;
        let curve = extract_level_set(&mesh, &u, level).unwrap();
        assert!(curve.signed_area() > 0.0);
        for p in curve.points() {
            let r = p.dist(outer.center);
            assert!(
                (r - level).abs() <= h * h / (2.0 * 0.4) + 1e-6,
                "radius {r} vs {level}"
            );
        }
    }

    #[test]
    fn level_out_of_range_is_rejected() {
        let outer = Circle::new(Point::new(2.42, 0.0), 0.92);
        let inner = ClosedCurve::circle(Circle::new(Point::new(2.42, 0.0), 0.4), 64).unwrap();
        let mesh = generate_mesh(outer, &inner, 0.06).unwrap();
        let u = radial_field(&mesh);
        assert!(matches!(
            extract_level_set(&mesh, &u, 2.0),
            Err(OptError::LevelOutOfRange { .. })
        ));
        assert!(matches!(
            extract_level_set(&mesh, &u, 0.1),
            Err(OptError::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn sample_field_inside_and_outside() {
        let outer = Circle::new(Point::new(2.42, 0.0), 0.92);
        let inner = ClosedCurve::circle(Circle::new(Point::new(2.42, 0.0), 0.4), 64).unwrap();
        let mesh = generate_mesh(outer, &inner, 0.06).unwrap();
        let u = radial_field(&mesh);
        let got = sample_field(&mesh, &u, Point::new(2.42 + 0.7, 0.0)).unwrap();
        assert!((got - 0.7).abs() < 1e-3);
        assert!(sample_field(&mesh, &u, Point::new(2.42, 0.0)).is_none());
        assert!(sample_field(&mesh, &u, Point::new(4.0, 0.0)).is_none());
    }
}
