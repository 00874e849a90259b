//! Planar geometry primitives shared across the toolkit: points, circles,
//! closed polylines and the distance/containment queries the mesh and
//! optimizer need.

use std::f64::consts::TAU;

use crate::error::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, treating both as vectors.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        self.sub(other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    /// Point on the circle at polar angle `theta` (radians, from center).
    pub fn at(self, theta: f64) -> Point {
        Point::new(
            self.center.x + self.radius * theta.cos(),
            self.center.y + self.radius * theta.sin(),
        )
    }

    pub fn perimeter(self) -> f64 {
        TAU * self.radius
    }
}

/// Simple closed polyline, counterclockwise, implicitly closed
/// (`points[n-1]` connects back to `points[0]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    points: Vec<Point>,
}

impl ClosedCurve {
    /// Validates simplicity, orientation and vertex count.
    pub fn new(points: Vec<Point>) -> Result<Self, GeometryError> {
        if points.len() < 8 {
            return Err(GeometryError::TooFewVertices { got: points.len() });
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFiniteVertex);
        }
        let area = signed_area(&points);
        if area <= 0.0 {
            return Err(GeometryError::NotCounterClockwise { area });
        }
        if let Some((i, j)) = first_self_intersection(&points) {
            return Err(GeometryError::SelfIntersecting { seg_a: i, seg_b: j });
        }
        Ok(Self { points })
    }

    /// Regular polygon approximation of a circle. `n` must be >= 8.
    pub fn circle(circle: Circle, n: usize) -> Result<Self, GeometryError> {
        let pts = (0..n)
            .map(|i| circle.at(TAU * i as f64 / n as f64))
            .collect();
        Self::new(pts)
    }

    /// Star-shaped curve r(θ) = r0 (1 + amp cos kθ) around `center`.
    pub fn star(center: Point, r0: f64, amp: f64, k: u32, n: usize) -> Result<Self, GeometryError> {
        let pts = (0..n)
            .map(|i| {
                let th = TAU * i as f64 / n as f64;
                let r = r0 * (1.0 + amp * (k as f64 * th).cos());
                Point::new(center.x + r * th.cos(), center.y + r * th.sin())
            })
            .collect();
        Self::new(pts)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.points)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| self.points[i].dist(self.points[(i + 1) % n]))
            .sum()
    }

    pub fn centroid(&self) -> Point {
        // area centroid of the polygon
        let n = self.points.len();
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a = 0.0;
        for i in 0..n {
            let p = self.points[i];
            let q = self.points[(i + 1) % n];
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
            a += w;
        }
        Point::new(cx / (3.0 * a), cy / (3.0 * a))
    }

    /// Even-odd containment test; points on the boundary are not guaranteed
    /// either way.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.points.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            if (a.y > p.y) != (b.y > p.y) {
                let t = (p.y - a.y) / (b.y - a.y);
                if p.x < a.x + t * (b.x - a.x) {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from `p` to the polyline (closest point on any segment).
    pub fn distance_to(&self, p: Point) -> f64 {
        let n = self.points.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let d = dist_point_segment(p, self.points[i], self.points[(i + 1) % n]);
            if d < best {
                best = d;
            }
        }
        best
    }

    /// Radius of the curve along the ray from `center` at angle `theta`.
    /// Requires the curve to be star-shaped with respect to `center`.
    pub fn radius_at(&self, center: Point, theta: f64) -> Result<f64, GeometryError> {
        let dir = Point::new(theta.cos(), theta.sin());
        let n = self.points.len();
        let mut hits: Vec<f64> = Vec::new();
        for i in 0..n {
            let a = self.points[i].sub(center);
            let b = self.points[(i + 1) % n].sub(center);
            // solve a + s (b-a) = t dir with t > 0, s in [0,1);
            // crossing both sides with dir eliminates t
            let e = b.sub(a);
            let denom = e.cross(dir);
            if denom.abs() < 1e-300 {
                continue;
            }
            let s = -a.cross(dir) / denom;
            // inclusive with slack so rays through shared vertices register
            // on at least one incident segment
            if !(-1e-12..=1.0 + 1e-12).contains(&s) {
                continue;
            }
            let t = a.add(e.scale(s)).dot(dir);
            if t > 0.0 {
                hits.push(t);
            }
        }
        match hits.len() {
            1 => Ok(hits[0]),
            0 => Err(GeometryError::NotStarShaped { theta }),
            _ => {
                // collapse nearly identical hits from shared vertices
                hits.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let spread = hits.last().unwrap() - hits[0];
                if spread < 1e-9 * hits[0].max(1.0) {
                    Ok(hits[0])
                } else {
                    Err(GeometryError::NotStarShaped { theta })
                }
            }
        }
    }

    /// Moving average over three consecutive vertices; used to damp
    /// mesh-induced oscillation of the free boundary.
    pub fn smoothed(&self) -> ClosedCurve {
        let n = self.points.len();
        let pts = (0..n)
            .map(|i| {
                let a = self.points[(i + n - 1) % n];
                let b = self.points[i];
                let c = self.points[(i + 1) % n];
                Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
            })
            .collect();
        ClosedCurve { points: pts }
    }

    pub fn translated(&self, d: Point) -> ClosedCurve {
        ClosedCurve {
            points: self.points.iter().map(|p| p.add(d)).collect(),
        }
    }

    /// Mean distance of the vertices from `center`.
    pub fn mean_radius(&self, center: Point) -> f64 {
        self.points.iter().map(|p| p.dist(center)).sum::<f64>() / self.points.len() as f64
    }
}

/// Symmetric Hausdorff distance between two closed polylines.
pub fn hausdorff_distance(a: &ClosedCurve, b: &ClosedCurve) -> f64 {
    let da = a
        .points()
        .iter()
        .map(|p| b.distance_to(*p))
        .fold(0.0_f64, f64::max);
    let db = b
        .points()
        .iter()
        .map(|p| a.distance_to(*p))
        .fold(0.0_f64, f64::max);
    da.max(db)
}

pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    0.5 * (0..n)
        .map(|i| points[i].cross(points[(i + 1) % n]))
        .sum::<f64>()
}

pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a.add(ab.scale(t)))
}

/// Proper-crossing test between open segments (shared endpoints excluded).
fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = b.sub(a).cross(c.sub(a));
    let d2 = b.sub(a).cross(d.sub(a));
    let d3 = d.sub(c).cross(a.sub(c));
    let d4 = d.sub(c).cross(b.sub(c));
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

fn first_self_intersection(points: &[Point]) -> Option<(usize, usize)> {
    let n = points.len();
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        for j in (i + 2)..n {
            // skip the closing segment's adjacency with segment 0
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (points[j], points[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Wraps an angle into [0, 2π).
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % TAU;
    if t < 0.0 {
        t += TAU;
    }
    // guard against -1e-17 % TAU == TAU after the add
    if t >= TAU {
        t -= TAU;
    }
    t
}
