//! P1 triangulations of the doubly connected domain between the fixed outer
//! circle Γ_E and a moving inner closed curve Γ_P.
//!
//! The generator lays concentric rings interpolating between the inner
//! polyline and the outer circle (each ring sampled at its own arclength
//! resolution), zips consecutive rings into triangle strips and relaxes the
//! interior by Laplacian smoothing. Boundary edges are stored with the
//! domain on their left, so the outward normal is always the right-hand
//! rotation of the tangent — on Γ_P that normal points into the plasma hole.

mod io;

use std::f64::consts::TAU;

use crate::error::MeshError;
use crate::geometry::{signed_area, Circle, ClosedCurve, Point};

pub use io::{load_mesh, parse_mesh, save_mesh};

/// Boundary loop identity: the outer wall or the free plasma boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoopTag {
    GammaE,
    GammaP,
}

impl LoopTag {
    pub fn as_str(self) -> &'static str {
        match self {
            LoopTag::GammaE => "GAMMA_E",
            LoopTag::GammaP => "GAMMA_P",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeTag {
    Interior,
    GammaE,
    GammaP,
}

/// Oriented boundary edge a → b with the domain on its left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: LoopTag,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    /// positively oriented index triples
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub node_tags: Vec<NodeTag>,
    pub outer_circle: Circle,
}

/// Per-edge geometry on a boundary loop.
#[derive(Debug, Clone, Copy)]
pub struct EdgeGeometry {
    pub a: usize,
    pub b: usize,
    pub midpoint: Point,
    /// unit, outward with respect to the domain
    pub normal: Point,
    /// unit, along the stored orientation
    pub tangent: Point,
    pub length: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct QualityReport {
    pub min_angle_deg: f64,
    /// smallest over triangles of area / (√3/4 · longest-edge²); 1 for
    /// equilateral, → 0 for slivers
    pub min_area_ratio: f64,
    pub worst_triangle: usize,
    pub max_edge: f64,
    pub min_edge: f64,
}

impl QualityReport {
    pub fn edge_ratio(&self) -> f64 {
        self.max_edge / self.min_edge
    }
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [i, j, k] = self.triangles[t];
        0.5 * (self.nodes[j].sub(self.nodes[i])).cross(self.nodes[k].sub(self.nodes[i]))
    }

    pub fn triangle_centroid(&self, t: usize) -> Point {
        let [i, j, k] = self.triangles[t];
        Point::new(
            (self.nodes[i].x + self.nodes[j].x + self.nodes[k].x) / 3.0,
            (self.nodes[i].y + self.nodes[j].y + self.nodes[k].y) / 3.0,
        )
    }

    /// Structural invariants: positive areas, two tagged closed loops,
    /// outer nodes on the circle.
    pub fn validate(&self) -> Result<(), MeshError> {
        if self.node_tags.len() != self.nodes.len() {
            return Err(MeshError::Invalid {
                reason: "node tag array length mismatch".into(),
            });
        }
        for (t, _) in self.triangles.iter().enumerate() {
            let area = self.triangle_area(t);
            if !(area > 0.0) {
                return Err(MeshError::InvertedTriangle { index: t, area });
            }
        }
        for tag in [LoopTag::GammaE, LoopTag::GammaP] {
            self.boundary_loop(tag)?;
        }
        let c = self.outer_circle;
        for (i, p) in self.nodes.iter().enumerate() {
            if self.node_tags[i] == NodeTag::GammaE {
                let dev = (p.dist(c.center) - c.radius).abs();
                if dev > 1e-9 * c.radius {
                    return Err(MeshError::Invalid {
                        reason: format!("Γ_E node {i} off the outer circle by {dev}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Ordered node indices along the stored orientation of one loop.
    pub fn boundary_loop(&self, tag: LoopTag) -> Result<Vec<usize>, MeshError> {
        let edges: Vec<&BoundaryEdge> =
            self.boundary_edges.iter().filter(|e| e.tag == tag).collect();
        if edges.is_empty() {
            return Err(MeshError::TagMissing {
                tag: tag.as_str(),
            });
        }
        let mut next = std::collections::HashMap::new();
        for e in &edges {
            if next.insert(e.a, e.b).is_some() {
                return Err(MeshError::Invalid {
                    reason: format!("node {} has two outgoing {} edges", e.a, tag.as_str()),
                });
            }
        }
        let start = edges[0].a;
        let mut order = vec![start];
        let mut cur = start;
        loop {
            let nxt = *next.get(&cur).ok_or_else(|| MeshError::Invalid {
                reason: format!("{} loop broken at node {cur}", tag.as_str()),
            })?;
            if nxt == start {
                break;
            }
            order.push(nxt);
            if order.len() > edges.len() {
                return Err(MeshError::Invalid {
                    reason: format!("{} edges do not form a single loop", tag.as_str()),
                });
            }
            cur = nxt;
        }
        if order.len() != edges.len() {
            return Err(MeshError::Invalid {
                reason: format!("{} edges form more than one loop", tag.as_str()),
            });
        }
        Ok(order)
    }

    /// The loop as a counterclockwise closed curve.
    pub fn boundary_curve(&self, tag: LoopTag) -> Result<ClosedCurve, MeshError> {
        let order = self.boundary_loop(tag)?;
        let mut pts: Vec<Point> = order.iter().map(|i| self.nodes[*i]).collect();
        if signed_area(&pts) < 0.0 {
            pts.reverse();
        }
        ClosedCurve::new(pts).map_err(MeshError::from)
    }

    /// Midpoint, outward normal, tangent and length per edge of a loop.
    pub fn boundary_geometry(&self, tag: LoopTag) -> Result<Vec<EdgeGeometry>, MeshError> {
        let edges: Vec<&BoundaryEdge> =
            self.boundary_edges.iter().filter(|e| e.tag == tag).collect();
        if edges.is_empty() {
            return Err(MeshError::TagMissing {
                tag: tag.as_str(),
            });
        }
        Ok(edges
            .iter()
            .map(|e| {
                let pa = self.nodes[e.a];
                let pb = self.nodes[e.b];
                let length = pa.dist(pb);
                let tangent = pb.sub(pa).scale(1.0 / length);
                // domain on the left ⇒ outward is the right-hand rotation
                let normal = Point::new(tangent.y, -tangent.x);
                EdgeGeometry {
                    a: e.a,
                    b: e.b,
                    midpoint: pa.add(pb).scale(0.5),
                    normal,
                    tangent,
                    length,
                }
            })
            .collect())
    }

    /// Angle (radians) of a node seen from the outer-circle center.
    pub fn node_angle(&self, i: usize) -> f64 {
        let d = self.nodes[i].sub(self.outer_circle.center);
        d.y.atan2(d.x)
    }

    /// New mesh with nodes moved by `t · v`; connectivity unchanged.
    /// The velocity must vanish on Γ_E and the result must stay valid.
    pub fn deform(&self, velocity: &[Point], t: f64) -> Result<Mesh, MeshError> {
        if velocity.len() != self.nodes.len() {
            return Err(MeshError::Invalid {
                reason: format!(
                    "velocity length {} vs {} nodes",
                    velocity.len(),
                    self.nodes.len()
                ),
            });
        }
        for (i, v) in velocity.iter().enumerate() {
            if self.node_tags[i] == NodeTag::GammaE && v.norm() != 0.0 {
                return Err(MeshError::NonzeroOuterVelocity { node: i });
            }
        }
        let nodes: Vec<Point> = self
            .nodes
            .iter()
            .zip(velocity)
            .map(|(p, v)| p.add(v.scale(t)))
            .collect();
        let out = Mesh {
            nodes,
            triangles: self.triangles.clone(),
            boundary_edges: self.boundary_edges.clone(),
            node_tags: self.node_tags.clone(),
            outer_circle: self.outer_circle,
        };
        for t_idx in 0..out.triangles.len() {
            let area = out.triangle_area(t_idx);
            if !(area > 0.0) {
                return Err(MeshError::InvertedTriangle {
                    index: t_idx,
                    area,
                });
            }
        }
        Ok(out)
    }

    pub fn quality(&self) -> QualityReport {
        let mut report = QualityReport {
            min_angle_deg: f64::INFINITY,
            min_area_ratio: f64::INFINITY,
            worst_triangle: 0,
            max_edge: 0.0,
            min_edge: f64::INFINITY,
        };
        for (t, tri) in self.triangles.iter().enumerate() {
            let p = [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]];
            let e = [p[1].dist(p[2]), p[2].dist(p[0]), p[0].dist(p[1])];
            let area = self.triangle_area(t).abs();
            let longest = e[0].max(e[1]).max(e[2]);
            report.max_edge = report.max_edge.max(longest);
            report.min_edge = report.min_edge.min(e[0].min(e[1]).min(e[2]));
            let ratio = area / (3f64.sqrt() / 4.0 * longest * longest);
            if ratio < report.min_area_ratio {
                report.min_area_ratio = ratio;
            }
            for v in 0..3 {
                let a = p[(v + 1) % 3].sub(p[v]);
                let b = p[(v + 2) % 3].sub(p[v]);
                let angle = a.cross(b).abs().atan2(a.dot(b)).to_degrees();
                if angle < report.min_angle_deg {
                    report.min_angle_deg = angle;
                    report.worst_triangle = t;
                }
            }
        }
        report
    }

    /// Same mesh with nodes renumbered by `perm` (new index = perm[old]).
    pub fn renumbered(&self, perm: &[usize]) -> Mesh {
        let n = self.nodes.len();
        let mut nodes = vec![Point::new(0.0, 0.0); n];
        let mut node_tags = vec![NodeTag::Interior; n];
        for i in 0..n {
            nodes[perm[i]] = self.nodes[i];
            node_tags[perm[i]] = self.node_tags[i];
        }
        Mesh {
            nodes,
            triangles: self
                .triangles
                .iter()
                .map(|t| [perm[t[0]], perm[t[1]], perm[t[2]]])
                .collect(),
            boundary_edges: self
                .boundary_edges
                .iter()
                .map(|e| BoundaryEdge {
                    a: perm[e.a],
                    b: perm[e.b],
                    tag: e.tag,
                })
                .collect(),
            node_tags,
            outer_circle: self.outer_circle,
        }
    }
}

/// Jacobi relaxation of interior nodes toward neighbor averages.
fn laplacian_smooth(
    nodes: &mut [Point],
    triangles: &[[usize; 3]],
    node_tags: &[NodeTag],
    sweeps: usize,
) {
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for t in triangles {
        for v in 0..3 {
            let (p, q) = (t[v], t[(v + 1) % 3]);
            if !neighbors[p].contains(&q) {
                neighbors[p].push(q);
            }
            if !neighbors[q].contains(&p) {
                neighbors[q].push(p);
            }
        }
    }
    for _ in 0..sweeps {
        let snapshot = nodes.to_vec();
        for i in 0..nodes.len() {
            if node_tags[i] != NodeTag::Interior || neighbors[i].is_empty() {
                continue;
            }
            let mut avg = Point::new(0.0, 0.0);
            for &nb in &neighbors[i] {
                avg = avg.add(snapshot[nb]);
            }
            let avg = avg.scale(1.0 / neighbors[i].len() as f64);
            nodes[i] = snapshot[i].add(avg.sub(snapshot[i]).scale(0.5));
        }
    }
}

/// Lawson flips toward the Delaunay criterion. Boundary edges (single
/// adjacent triangle) are never touched; each pass visits edges in sorted
/// order, so the result is deterministic.
fn lawson_flips(nodes: &[Point], triangles: &mut [[usize; 3]], max_passes: usize) -> usize {
    let mut total = 0;
    for _ in 0..max_passes {
        let mut edge_map: std::collections::HashMap<(usize, usize), Vec<usize>> =
            std::collections::HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for v in 0..3 {
                let (a, b) = (tri[v], tri[(v + 1) % 3]);
                edge_map.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        let mut keys: Vec<(usize, usize)> = edge_map.keys().cloned().collect();
        keys.sort();
        let mut dirty = vec![false; triangles.len()];
        let mut flipped = 0;
        for key in keys {
            let ts = &edge_map[&key];
            if ts.len() != 2 || dirty[ts[0]] || dirty[ts[1]] {
                continue;
            }
            let (mut t1, mut t2) = (ts[0], ts[1]);
            let (mut a, mut b) = key;
            // orient so t1 holds the directed edge a→b
            if !has_directed_edge(&triangles[t1], a, b) {
                std::mem::swap(&mut t1, &mut t2);
            }
            if !has_directed_edge(&triangles[t1], a, b) {
                // inconsistent orientation; swap endpoints instead
                std::mem::swap(&mut a, &mut b);
                if !has_directed_edge(&triangles[t1], a, b) {
                    continue;
                }
            }
            let c = opposite_vertex(&triangles[t1], a, b);
            let d = opposite_vertex(&triangles[t2], b, a);
            // flip when the opposite angles sum beyond π
            let v1a = nodes[a].sub(nodes[c]);
            let v1b = nodes[b].sub(nodes[c]);
            let v2a = nodes[a].sub(nodes[d]);
            let v2b = nodes[b].sub(nodes[d]);
            let sin_c = v1a.cross(v1b).abs();
            let cos_c = v1a.dot(v1b);
            let sin_d = v2a.cross(v2b).abs();
            let cos_d = v2a.dot(v2b);
            if cos_c * sin_d + cos_d * sin_c >= -1e-14 {
                continue;
            }
            let new1 = [a, d, c];
            let new2 = [d, b, c];
            let area = |t: &[usize; 3]| {
                (nodes[t[1]].sub(nodes[t[0]])).cross(nodes[t[2]].sub(nodes[t[0]]))
            };
            if area(&new1) <= 0.0 || area(&new2) <= 0.0 {
                continue;
            }
            triangles[t1] = new1;
            triangles[t2] = new2;
            dirty[t1] = true;
            dirty[t2] = true;
            flipped += 1;
        }
        total += flipped;
        if flipped == 0 {
            break;
        }
    }
    total
}

fn has_directed_edge(tri: &[usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|v| tri[v] == a && tri[(v + 1) % 3] == b)
}

fn opposite_vertex(tri: &[usize; 3], a: usize, b: usize) -> usize {
    *tri.iter().find(|v| **v != a && **v != b).unwrap()
}

/// Ring/zipper mesh generator for the annular region.
///
/// The inner curve must be star-shaped about the outer-circle center and at
/// least 3h away from the wall.
pub fn generate_mesh(outer: Circle, inner: &ClosedCurve, h: f64) -> Result<Mesh, MeshError> {
    let center = outer.center;
    // radial profile of the inner curve
    let n_profile = 1024;
    let mut r_in = Vec::with_capacity(n_profile);
    for i in 0..n_profile {
        let theta = TAU * i as f64 / n_profile as f64;
        r_in.push(inner.radius_at(center, theta)?);
    }
    let r_in_at = |theta: f64| -> f64 {
        let s = crate::geometry::wrap_angle(theta) / TAU * n_profile as f64;
        let i = (s as usize) % n_profile;
        let frac = s - s.floor();
        r_in[i] * (1.0 - frac) + r_in[(i + 1) % n_profile] * frac
    };

    let gap_min = r_in
        .iter()
        .map(|r| outer.radius - r)
        .fold(f64::INFINITY, f64::min);
    let gap_max = r_in
        .iter()
        .map(|r| outer.radius - r)
        .fold(f64::NEG_INFINITY, f64::max);
    if gap_min < 3.0 * h {
        return Err(MeshError::GapTooSmall {
            gap: gap_min,
            need: 3.0 * h,
        });
    }

    // rings: radial spacing at most 0.9h at the widest gap
    let n_rings = ((gap_max / (0.9 * h)).ceil() as usize).max(3);
    let mut ring_nodes: Vec<Vec<usize>> = Vec::with_capacity(n_rings + 1);
    let mut nodes: Vec<Point> = Vec::new();
    let mut node_tags: Vec<NodeTag> = Vec::new();

    for j in 0..=n_rings {
        let t = j as f64 / n_rings as f64;
        let radius_at = |theta: f64| r_in_at(theta) * (1.0 - t) + outer.radius * t;
        // ring perimeter from the profile
        let mut perim = 0.0;
        let mut prev = Point::new(center.x + radius_at(0.0), center.y);
        for i in 1..=n_profile {
            let theta = TAU * i as f64 / n_profile as f64;
            let p = Point::new(
                center.x + radius_at(theta) * theta.cos(),
                center.y + radius_at(theta) * theta.sin(),
            );
            perim += prev.dist(p);
            prev = p;
        }
        let count = ((perim / (0.95 * h)).ceil() as usize).max(16);
        let tag = if j == 0 {
            NodeTag::GammaP
        } else if j == n_rings {
            NodeTag::GammaE
        } else {
            NodeTag::Interior
        };
        let mut ring = Vec::with_capacity(count);
        for i in 0..count {
            let theta = TAU * i as f64 / count as f64;
            let r = if j == n_rings {
                outer.radius // wall nodes exactly on the circle
            } else if j == 0 {
                inner.radius_at(center, theta)? // boundary nodes exactly on the polyline
            } else {
                radius_at(theta)
            };
            ring.push(nodes.len());
            nodes.push(Point::new(
                center.x + r * theta.cos(),
                center.y + r * theta.sin(),
            ));
            node_tags.push(tag);
        }
        ring_nodes.push(ring);
    }

    // zipper consecutive rings (a = closer to the hole, b = outward)
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for j in 0..n_rings {
        let a = &ring_nodes[j];
        let b = &ring_nodes[j + 1];
        let (na, nb) = (a.len(), b.len());
        let (mut i, mut k) = (0usize, 0usize);
        while i < na || k < nb {
            let advance_a = if i == na {
                false
            } else if k == nb {
                true
            } else {
                (i + 1) as f64 / na as f64 <= (k + 1) as f64 / nb as f64
            };
            if advance_a {
                triangles.push([a[i % na], b[k % nb], a[(i + 1) % na]]);
                i += 1;
            } else {
                triangles.push([a[i % na], b[k % nb], b[(k + 1) % nb]]);
                k += 1;
            }
        }
    }

    // alternate Delaunay edge flips with interior relaxation
    lawson_flips(&nodes, &mut triangles, 50);
    laplacian_smooth(&mut nodes, &triangles, &node_tags, 8);
    lawson_flips(&nodes, &mut triangles, 50);
    laplacian_smooth(&mut nodes, &triangles, &node_tags, 4);
    lawson_flips(&nodes, &mut triangles, 50);

    // boundary loops: Γ_E counterclockwise, Γ_P clockwise (domain on left)
    let mut boundary_edges = Vec::new();
    let inner_ring = &ring_nodes[0];
    for i in 0..inner_ring.len() {
        boundary_edges.push(BoundaryEdge {
            a: inner_ring[(i + 1) % inner_ring.len()],
            b: inner_ring[i],
            tag: LoopTag::GammaP,
        });
    }
    let outer_ring = &ring_nodes[n_rings];
    for i in 0..outer_ring.len() {
        boundary_edges.push(BoundaryEdge {
            a: outer_ring[i],
            b: outer_ring[(i + 1) % outer_ring.len()],
            tag: LoopTag::GammaE,
        });
    }

    let mesh = Mesh {
        nodes,
        triangles,
        boundary_edges,
        node_tags,
        outer_circle: outer,
    };
    mesh.validate()?;
    let q = mesh.quality();
    if q.min_angle_deg < 20.0 {
        return Err(MeshError::QualityContract {
            min_angle_deg: q.min_angle_deg,
        });
    }
    if q.max_edge > 1.5 * h {
        return Err(MeshError::Invalid {
            reason: format!("max edge {} exceeds 1.5h = {}", q.max_edge, 1.5 * h),
        });
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hausdorff_distance;

    fn tore_supra_wall() -> Circle {
        Circle::new(Point::new(2.42, 0.0), 0.92)
    }

    fn inner_circle(r: f64) -> ClosedCurve {
        ClosedCurve::circle(Circle::new(Point::new(2.42, 0.0), r), 128).unwrap()
    }

    #[test]
    fn generates_valid_mesh_on_wall_geometry() {
        let mesh = generate_mesh(tore_supra_wall(), &inner_circle(0.5), 0.05).unwrap();
        mesh.validate().unwrap();
        let q = mesh.quality();
        assert!(q.min_angle_deg >= 20.0, "min angle {}", q.min_angle_deg);
        assert!(q.max_edge <= 1.5 * 0.05);
        assert!(mesh.boundary_loop(LoopTag::GammaE).is_ok());
        assert!(mesh.boundary_loop(LoopTag::GammaP).is_ok());
    }

    #[test]
    fn rejects_touching_inner_curve() {
        let touching = inner_circle(0.88);
        assert!(matches!(
            generate_mesh(tore_supra_wall(), &touching, 0.05),
            Err(MeshError::GapTooSmall { .. })
        ));
    }

    #[test]
    fn refinement_quadruples_triangle_count() {
        let coarse = generate_mesh(tore_supra_wall(), &inner_circle(0.5), 0.08).unwrap();
        let fine = generate_mesh(tore_supra_wall(), &inner_circle(0.5), 0.04).unwrap();
        let factor = fine.n_triangles() as f64 / coarse.n_triangles() as f64;
        assert!(
            (3.5..=4.5).contains(&factor),
            "refinement factor {factor} ({} → {})",
            coarse.n_triangles(),
            fine.n_triangles()
        );
    }

    #[test]
    fn star_domain_meets_quality_contract() {
        let star = ClosedCurve::star(Point::new(2.42, 0.0), 0.45, 0.12, 3, 160).unwrap();
        let mesh = generate_mesh(tore_supra_wall(), &star, 0.04).unwrap();
        let q = mesh.quality();
        assert!(q.min_angle_deg >= 20.0, "min angle {}", q.min_angle_deg);
        // generated Γ_P stays on the requested polyline
        let curve = mesh.boundary_curve(LoopTag::GammaP).unwrap();
        for p in curve.points() {
            assert!(star.distance_to(*p) < 1e-9);
        }
    }

    #[test]
    fn deform_zero_step_is_identity() {
        let mesh = generate_mesh(tore_supra_wall(), &inner_circle(0.5), 0.06).unwrap();
        let v = vec![Point::new(0.0, 0.0); mesh.n_nodes()];
        let moved = mesh.deform(&v, 0.0).unwrap();
        for (a, b) in mesh.nodes.iter().zip(&moved.nodes) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn deform_radial_field_grows_inner_radius() {
        let mesh = generate_mesh(tore_supra_wall(), &inner_circle(0.5), 0.06).unwrap();
        let center = mesh.outer_circle.center;
        let v: Vec<Point> = (0..mesh.n_nodes())
            .map(|i| {
                if mesh.node_tags[i] == NodeTag::GammaP {
                    let d = mesh.nodes[i].sub(center);
                    d.scale(1.0 / d.norm())
                } else {
                    Point::new(0.0, 0.0)
                }
            })
            .collect();
        let t = 0.01;
        let moved = mesh.deform(&v, t).unwrap();
        for i in 0..mesh.n_nodes() {
            if mesh.node_tags[i] == NodeTag::GammaP {
                let before = mesh.nodes[i].dist(center);
                let after = moved.nodes[i].dist(center);
                assert!((after - before - t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deform_detects_inversion_and_outer_motion() {
        let mesh = generate_mesh(tore_supra_wall(), &inner_circle(0.5), 0.06).unwrap();
        let center = mesh.outer_circle.center;
        let v: Vec<Point> = (0..mesh.n_nodes())
            .map(|i| {
                if mesh.node_tags[i] == NodeTag::GammaP {
                    let d = mesh.nodes[i].sub(center);
                    d.scale(1.0 / d.norm())
                } else {
                    Point::new(0.0, 0.0)
                }
            })
            .collect();
        assert!(matches!(
            mesh.deform(&v, 10.0),
            Err(MeshError::InvertedTriangle { .. })
        ));
        let bad = vec![Point::new(1.0, 0.0); mesh.n_nodes()];
        assert!(matches!(
            mesh.deform(&bad, 0.1),
            Err(MeshError::NonzeroOuterVelocity { .. })
        ));
    }

    #[test]
    fn deform_roundtrip_restores_nodes() {
        let mesh = generate_mesh(tore_supra_wall(), &inner_circle(0.5), 0.06).unwrap();
        let center = mesh.outer_circle.center;
        let v: Vec<Point> = (0..mesh.n_nodes())
            .map(|i| match mesh.node_tags[i] {
                NodeTag::GammaE => Point::new(0.0, 0.0),
                _ => {
                    let d = mesh.nodes[i].sub(center);
                    Point::new(-d.y, d.x).scale(0.3)
                }
            })
            .collect();
        let there = mesh.deform(&v, 0.02).unwrap();
        let back = there.deform(&v, -0.02).unwrap();
        for (a, b) in mesh.nodes.iter().zip(&back.nodes) {
            assert!(a.dist(*b) < 1e-12);
        }
    }

    fn single_triangle(points: [Point; 3]) -> Mesh {
        Mesh {
            nodes: points.to_vec(),
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![],
            node_tags: vec![NodeTag::Interior; 3],
            outer_circle: Circle::new(Point::new(0.0, 0.0), 1.0),
        }
    }

    #[test]
    fn quality_of_equilateral_triangle() {
        let m = single_triangle([
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 3f64.sqrt() / 2.0),
        ]);
        let q = m.quality();
        assert!((q.min_angle_deg - 60.0).abs() < 1e-9);
        assert!((q.min_area_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quality_flags_sliver() {
        let m = single_triangle([
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 1e-3),
        ]);
        let q = m.quality();
        assert!(q.min_angle_deg < 1.0, "min angle {}", q.min_angle_deg);
        assert_eq!(q.worst_triangle, 0);
    }

    #[test]
    fn boundary_normals_point_outward() {
        let mesh = generate_mesh(tore_supra_wall(), &inner_circle(0.5), 0.05).unwrap();
        let center = mesh.outer_circle.center;
        for e in mesh.boundary_geometry(LoopTag::GammaE).unwrap() {
            let radial = e.midpoint.sub(center);
            let align = e.normal.dot(radial.scale(1.0 / radial.norm()));
            assert!(align >= 1.0 - 1e-6, "outer normal misaligned: {align}");
            assert!(e.normal.dot(e.tangent).abs() < 1e-12);
        }
        for e in mesh.boundary_geometry(LoopTag::GammaP).unwrap() {
            let radial = e.midpoint.sub(center);
            // on Γ_P the outward normal points into the hole (toward the center here)
            let align = e.normal.dot(radial.scale(1.0 / radial.norm()));
            assert!(align <= -1.0 + 1e-3, "inner normal misaligned: {align}");
        }
    }

    #[test]
    fn boundary_perimeter_matches_circle() {
        let mesh = generate_mesh(tore_supra_wall(), &inner_circle(0.5), 0.02).unwrap();
        let perim: f64 = mesh
            .boundary_geometry(LoopTag::GammaP)
            .unwrap()
            .iter()
            .map(|e| e.length)
            .sum();
        let expect = TAU * 0.5;
        assert!(
            (perim - expect).abs() / expect < 1e-3,
            "perimeter {perim} vs {expect}"
        );
    }

    #[test]
    fn closed_loop_gauss_identity() {
        let mesh = generate_mesh(tore_supra_wall(), &inner_circle(0.5), 0.05).unwrap();
        for tag in [LoopTag::GammaE, LoopTag::GammaP] {
            let geo = mesh.boundary_geometry(tag).unwrap();
            let perim: f64 = geo.iter().map(|e| e.length).sum();
            let mut total = Point::new(0.0, 0.0);
            for e in &geo {
                total = total.add(e.normal.scale(e.length));
            }
            assert!(
                total.norm() <= 1e-10 * perim,
                "Σ length·normal = {total:?} on {tag:?}"
            );
        }
    }

    #[test]
    fn validity_invariant_under_renumbering() {
        let mesh = generate_mesh(tore_supra_wall(), &inner_circle(0.5), 0.07).unwrap();
        let n = mesh.n_nodes();
        // deterministic scramble
        let perm: Vec<usize> = (0..n).map(|i| (i * 7919 + 13) % n).collect();
        let mut seen = vec![false; n];
        for &p in &perm {
            assert!(!seen[p], "not a permutation");
            seen[p] = true;
        }
        let renum = mesh.renumbered(&perm);
        renum.validate().unwrap();
        let c0 = mesh.boundary_curve(LoopTag::GammaP).unwrap();
        let c1 = renum.boundary_curve(LoopTag::GammaP).unwrap();
        assert!(hausdorff_distance(&c0, &c1) < 1e-12);
    }
}
