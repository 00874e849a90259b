//! P1 finite elements on the annular meshes: stiffness/mass assembly with
//! centroid-sampled σ, the mixed and double-Dirichlet state solves, the
//! adjoint solve, consistent (variational) boundary flux, and the H¹
//! extension problem that turns the boundary shape gradient into a descent
//! velocity field.

pub mod sparse;

use std::collections::HashMap;

use crate::boundary_data::{Conductivity, PeriodicSpline};
use crate::error::FemError;
use crate::geometry::Point;
use crate::mesh::{LoopTag, Mesh, NodeTag};

pub use sparse::{pcg, CsrMatrix, Triplets};

/// Nodal scalar field on a mesh (one value per node).
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self, FemError> {
        if values.len() != mesh.n_nodes() {
            return Err(FemError::FieldSizeMismatch {
                got: values.len(),
                nodes: mesh.n_nodes(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FemError::FieldSizeMismatch {
                got: usize::MAX,
                nodes: mesh.n_nodes(),
            });
        }
        Ok(Self { values })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// P1 gradient on a triangle (constant per element).
    pub fn gradient_on(&self, mesh: &Mesh, t: usize) -> Point {
        let [i, j, k] = mesh.triangles[t];
        let (pi, pj, pk) = (mesh.nodes[i], mesh.nodes[j], mesh.nodes[k]);
        let area2 = (pj.sub(pi)).cross(pk.sub(pi));
        let (ui, uj, uk) = (self.values[i], self.values[j], self.values[k]);
        Point::new(
            (ui * (pj.y - pk.y) + uj * (pk.y - pi.y) + uk * (pi.y - pj.y)) / area2,
            (ui * (pk.x - pj.x) + uj * (pi.x - pk.x) + uk * (pj.x - pi.x)) / area2,
        )
    }

    /// Linear interpolation at a point inside triangle `t`.
    pub fn interpolate_in(&self, mesh: &Mesh, t: usize, p: Point) -> f64 {
        let [i, j, k] = mesh.triangles[t];
        let (pi, pj, pk) = (mesh.nodes[i], mesh.nodes[j], mesh.nodes[k]);
        let area2 = (pj.sub(pi)).cross(pk.sub(pi));
        let li = (pj.sub(p)).cross(pk.sub(p)) / area2;
        let lj = (pk.sub(p)).cross(pi.sub(p)) / area2;
        let lk = 1.0 - li - lj;
        li * self.values[i] + lj * self.values[j] + lk * self.values[k]
    }
}

/// Nodal 2-vector field.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub values: Vec<Point>,
}

impl VectorField {
    pub fn new(mesh: &Mesh, values: Vec<Point>) -> Result<Self, FemError> {
        if values.len() != mesh.n_nodes() {
            return Err(FemError::FieldSizeMismatch {
                got: values.len(),
                nodes: mesh.n_nodes(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FemError::FieldSizeMismatch {
                got: usize::MAX,
                nodes: mesh.n_nodes(),
            });
        }
        Ok(Self { values })
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            values: vec![Point::new(0.0, 0.0); mesh.n_nodes()],
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Which weight multiplies the Neumann datum u₁ in the weak form.
///
/// The governing weak form integrates σ·u₁ on the wall; the alternative
/// drops the σ factor (they differ when σ is not constant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeumannConvention {
    #[default]
    SigmaWeighted,
    Plain,
}

/// Symmetric system with Dirichlet constraints applied by elimination.
#[derive(Debug, Clone)]
pub struct SparseSpdSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constraints: Vec<(usize, f64)>,
}

/// Relative residual target for all linear solves.
pub const SOLVE_TOL: f64 = 1e-12;

impl SparseSpdSystem {
    pub fn solve(&self) -> Result<ScalarField, FemError> {
        let n = self.matrix.n;
        let mut constrained = vec![None; n];
        for (i, v) in &self.constraints {
            constrained[*i] = Some(*v);
        }
        let free: Vec<usize> = (0..n).filter(|i| constrained[*i].is_none()).collect();
        let mut to_reduced = vec![usize::MAX; n];
        for (r, &i) in free.iter().enumerate() {
            to_reduced[i] = r;
        }
        let mut reduced = Triplets::new(free.len());
        let mut rhs_f = vec![0.0; free.len()];
        for (r, &i) in free.iter().enumerate() {
            rhs_f[r] = self.rhs[i];
            for idx in self.matrix.row_ptr[i]..self.matrix.row_ptr[i + 1] {
                let j = self.matrix.col[idx];
                match constrained[j] {
                    None => reduced.push(r, to_reduced[j], self.matrix.val[idx]),
                    Some(v) => rhs_f[r] -= self.matrix.val[idx] * v,
                }
            }
        }
        let a = reduced.to_csr();
        let (x, _res, _iters) = pcg(&a, &rhs_f, SOLVE_TOL, 20 * free.len().max(100))?;
        let mut full = vec![0.0; n];
        for (i, c) in constrained.iter().enumerate() {
            full[i] = match c {
                Some(v) => *v,
                None => x[to_reduced[i]],
            };
        }
        Ok(ScalarField { values: full })
    }
}

/// Stiffness K[i,j] = ∫ σ ∇φ_i·∇φ_j, σ sampled at triangle centroids.
pub fn assemble_stiffness(mesh: &Mesh, sigma: &Conductivity) -> Result<CsrMatrix, FemError> {
    let mut trip = Triplets::new(mesh.n_nodes());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let s = sigma.eval(mesh.triangle_centroid(t));
        if !(s > 0.0) || !s.is_finite() {
            return Err(FemError::NonPositiveSigma {
                element: t,
                value: s,
            });
        }
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let area = mesh.triangle_area(t);
        // ∇λ_i = (b_i, c_i) / 2A
        let b = [p[1].y - p[2].y, p[2].y - p[0].y, p[0].y - p[1].y];
        let c = [p[2].x - p[1].x, p[0].x - p[2].x, p[1].x - p[0].x];
        for i in 0..3 {
            for j in 0..3 {
                trip.push(
                    tri[i],
                    tri[j],
                    s * (b[i] * b[j] + c[i] * c[j]) / (4.0 * area),
                );
            }
        }
    }
    Ok(trip.to_csr())
}

/// Consistent P1 mass matrix ∫ φ_i φ_j.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let mut trip = Triplets::new(mesh.n_nodes());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.triangle_area(t);
        for i in 0..3 {
            for j in 0..3 {
                let w = if i == j { area / 6.0 } else { area / 12.0 };
                trip.push(tri[i], tri[j], w);
            }
        }
    }
    trip.to_csr()
}

fn add_csr(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
    let mut trip = Triplets::new(a.n);
    for i in 0..a.n {
        for idx in a.row_ptr[i]..a.row_ptr[i + 1] {
            trip.push(i, a.col[idx], a.val[idx]);
        }
        for idx in b.row_ptr[i]..b.row_ptr[i + 1] {
            trip.push(i, b.col[idx], b.val[idx]);
        }
    }
    trip.to_csr()
}

/// One Gauss point of the boundary quadrature: physical position, angle
/// about the wall center, edge parameter s ∈ (0,1), the edge node indices
/// and the quadrature weight (already half the edge measure).
#[derive(Debug, Clone, Copy)]
pub struct BoundaryQuadPoint {
    pub x: Point,
    pub theta: f64,
    pub s: f64,
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// 2-point Gauss quadrature over a boundary loop. On Γ_E the measure is
/// the true circular arc (ρ·Δθ per edge), since the wall never moves; on
/// Γ_P it is the chord length of the polyline.
pub fn boundary_quadrature(mesh: &Mesh, tag: LoopTag) -> Result<Vec<BoundaryQuadPoint>, FemError> {
    let center = mesh.outer_circle.center;
    const GAUSS_S: [f64; 2] = [0.211324865405187, 0.788675134594813];
    let mut out = Vec::new();
    for e in mesh.boundary_geometry(tag)? {
        let pa = mesh.nodes[e.a];
        let pb = mesh.nodes[e.b];
        let measure = if tag == LoopTag::GammaE {
            let ta = {
                let d = pa.sub(center);
                d.y.atan2(d.x)
            };
            let tb = {
                let d = pb.sub(center);
                d.y.atan2(d.x)
            };
            let dt = crate::geometry::wrap_angle(tb - ta);
            mesh.outer_circle.radius * dt
        } else {
            e.length
        };
        for s in GAUSS_S {
            let x = pa.add(pb.sub(pa).scale(s));
            let d = x.sub(center);
            out.push(BoundaryQuadPoint {
                x,
                theta: d.y.atan2(d.x),
                s,
                a: e.a,
                b: e.b,
                weight: measure / 2.0,
            });
        }
    }
    Ok(out)
}

/// Boundary load vector Σ_e ∫_e f φ_i ds over one loop.
pub fn assemble_boundary_load(
    mesh: &Mesh,
    tag: LoopTag,
    f: &dyn Fn(&BoundaryQuadPoint) -> f64,
) -> Result<Vec<f64>, FemError> {
    let mut rhs = vec![0.0; mesh.n_nodes()];
    for q in boundary_quadrature(mesh, tag)? {
        let w = f(&q) * q.weight;
        rhs[q.a] += w * (1.0 - q.s);
        rhs[q.b] += w * q.s;
    }
    Ok(rhs)
}

fn dirichlet_nodes(mesh: &Mesh, tag: LoopTag) -> Vec<usize> {
    let want = match tag {
        LoopTag::GammaE => NodeTag::GammaE,
        LoopTag::GammaP => NodeTag::GammaP,
    };
    (0..mesh.n_nodes())
        .filter(|i| mesh.node_tags[*i] == want)
        .collect()
}

/// Mixed problem: ∫σ∇u·∇φ = ∫_{Γ_E} w·u₁·φ for φ vanishing on Γ_P,
/// u = c on Γ_P, with w = σ or 1 per the convention.
pub fn solve_state_mixed(
    mesh: &Mesh,
    sigma: &Conductivity,
    u1: &PeriodicSpline,
    c: f64,
    convention: NeumannConvention,
) -> Result<ScalarField, FemError> {
    let matrix = assemble_stiffness(mesh, sigma)?;
    let rhs = assemble_boundary_load(mesh, LoopTag::GammaE, &|q: &BoundaryQuadPoint| {
        let w = match convention {
            NeumannConvention::SigmaWeighted => sigma.eval(q.x),
            NeumannConvention::Plain => 1.0,
        };
        w * u1.eval(q.theta)
    })?;
    let constraints = dirichlet_nodes(mesh, LoopTag::GammaP)
        .into_iter()
        .map(|i| (i, c))
        .collect();
    SparseSpdSystem {
        matrix,
        rhs,
        constraints,
    }
    .solve()
}

/// Double-Dirichlet problem: u = u₀(θ) on Γ_E, u = c on Γ_P.
pub fn solve_state_dirichlet(
    mesh: &Mesh,
    sigma: &Conductivity,
    u0: &PeriodicSpline,
    c: f64,
) -> Result<ScalarField, FemError> {
    solve_dirichlet_nodal(mesh, sigma, &|i| u0.eval(mesh.node_angle(i)), c)
}

/// Double-Dirichlet with caller-supplied nodal values on Γ_E.
pub fn solve_dirichlet_nodal(
    mesh: &Mesh,
    sigma: &Conductivity,
    gamma_e_value: &dyn Fn(usize) -> f64,
    c: f64,
) -> Result<ScalarField, FemError> {
    let matrix = assemble_stiffness(mesh, sigma)?;
    let mut constraints: Vec<(usize, f64)> = dirichlet_nodes(mesh, LoopTag::GammaE)
        .into_iter()
        .map(|i| (i, gamma_e_value(i)))
        .collect();
    constraints.extend(
        dirichlet_nodes(mesh, LoopTag::GammaP)
            .into_iter()
            .map(|i| (i, c)),
    );
    SparseSpdSystem {
        matrix,
        rhs: vec![0.0; mesh.n_nodes()],
        constraints,
    }
    .solve()
}

/// Adjoint state: ∫σ∇p·∇φ = ∫_{Γ_E} 2(u − u₀)φ, p = 0 on Γ_P.
/// The Neumann datum σ∂p/∂n = 2(u − u₀) carries no extra σ weight.
pub fn solve_adjoint(
    mesh: &Mesh,
    sigma: &Conductivity,
    u: &ScalarField,
    u0: &PeriodicSpline,
) -> Result<ScalarField, FemError> {
    if u.values.len() != mesh.n_nodes() {
        return Err(FemError::FieldSizeMismatch {
            got: u.values.len(),
            nodes: mesh.n_nodes(),
        });
    }
    let matrix = assemble_stiffness(mesh, sigma)?;
    // u is P1 on each wall edge; interpolate it at the Gauss points
    let rhs = assemble_boundary_load(mesh, LoopTag::GammaE, &|q: &BoundaryQuadPoint| {
        let u_h = u.values[q.a] * (1.0 - q.s) + u.values[q.b] * q.s;
        2.0 * (u_h - u0.eval(q.theta))
    })?;
    let constraints = dirichlet_nodes(mesh, LoopTag::GammaP)
        .into_iter()
        .map(|i| (i, 0.0))
        .collect();
    SparseSpdSystem {
        matrix,
        rhs,
        constraints,
    }
    .solve()
}

/// Consistent flux density σ∂u/∂n per boundary node of one loop, in loop
/// order: the discrete residual (K u)_i divided by the lumped trace length.
/// Outward means out of the domain (into the hole on Γ_P).
pub fn nodal_flux_density(
    mesh: &Mesh,
    sigma: &Conductivity,
    field: &ScalarField,
    tag: LoopTag,
) -> Result<Vec<(usize, f64)>, FemError> {
    if field.values.len() != mesh.n_nodes() {
        return Err(FemError::FieldSizeMismatch {
            got: field.values.len(),
            nodes: mesh.n_nodes(),
        });
    }
    let matrix = assemble_stiffness(mesh, sigma)?;
    let t = matrix.matvec_alloc(&field.values);
    let order = mesh.boundary_loop(tag)?;
    let geo = mesh.boundary_geometry(tag)?;
    let mut lumped: HashMap<usize, f64> = HashMap::new();
    for e in &geo {
        *lumped.entry(e.a).or_insert(0.0) += e.length / 2.0;
        *lumped.entry(e.b).or_insert(0.0) += e.length / 2.0;
    }
    Ok(order
        .iter()
        .map(|&i| (i, t[i] / lumped[&i]))
        .collect())
}

/// Per-edge σ∂u/∂n on a loop (mean of the nodal densities at the edge
/// ends). Summing value·length over the loop reproduces the total nodal
/// flux exactly.
#[derive(Debug, Clone, Copy)]
pub struct EdgeFlux {
    pub a: usize,
    pub b: usize,
    pub midpoint: Point,
    pub length: f64,
    /// σ ∂u/∂n, outward
    pub value: f64,
}

pub fn boundary_flux(
    mesh: &Mesh,
    sigma: &Conductivity,
    field: &ScalarField,
    tag: LoopTag,
) -> Result<Vec<EdgeFlux>, FemError> {
    let density: HashMap<usize, f64> = nodal_flux_density(mesh, sigma, field, tag)?
        .into_iter()
        .collect();
    Ok(mesh
        .boundary_geometry(tag)?
        .iter()
        .map(|e| EdgeFlux {
            a: e.a,
            b: e.b,
            midpoint: e.midpoint,
            length: e.length,
            value: (density[&e.a] + density[&e.b]) / 2.0,
        })
        .collect())
}

/// Velocity extension: both components solve
/// ∫(∇V·∇φ + V·φ) = −∫_{Γ_P} g·φ with V = 0 on Γ_E, so the discrete
/// pairing ∫_{Γ_P} g·V equals −‖V‖²_{H¹} by construction.
#[derive(Debug, Clone)]
pub struct ExtensionSolution {
    pub velocity: VectorField,
    /// ‖V‖²_{H¹} under the same discrete operator
    pub h1_norm_sq: f64,
}

/// `grad` holds one vector per Γ_P edge, aligned with
/// `mesh.boundary_geometry(GammaP)`.
pub fn solve_extension(mesh: &Mesh, grad: &[Point]) -> Result<ExtensionSolution, FemError> {
    let geo = mesh.boundary_geometry(LoopTag::GammaP)?;
    if grad.len() != geo.len() {
        return Err(FemError::FieldSizeMismatch {
            got: grad.len(),
            nodes: geo.len(),
        });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(FemError::FieldSizeMismatch {
            got: usize::MAX,
            nodes: geo.len(),
        });
    }
    let unit = Conductivity::constant(1.0);
    let stiffness = assemble_stiffness(mesh, &unit)?;
    let mass = assemble_mass(mesh);
    let matrix = add_csr(&stiffness, &mass);
    let mut rhs_x = vec![0.0; mesh.n_nodes()];
    let mut rhs_y = vec![0.0; mesh.n_nodes()];
    for (e, g) in geo.iter().zip(grad) {
        // piecewise-constant g against P1 traces: half the edge integral
        // lands on each endpoint
        let w = e.length / 2.0;
        rhs_x[e.a] -= g.x * w;
        rhs_x[e.b] -= g.x * w;
        rhs_y[e.a] -= g.y * w;
        rhs_y[e.b] -= g.y * w;
    }
    let constraints: Vec<(usize, f64)> = dirichlet_nodes(mesh, LoopTag::GammaE)
        .into_iter()
        .map(|i| (i, 0.0))
        .collect();
    let vx = SparseSpdSystem {
        matrix: matrix.clone(),
        rhs: rhs_x,
        constraints: constraints.clone(),
    }
    .solve()?;
    let vy = SparseSpdSystem {
        matrix: matrix.clone(),
        rhs: rhs_y,
        constraints,
    }
    .solve()?;
    let ax = matrix.matvec_alloc(&vx.values);
    let ay = matrix.matvec_alloc(&vy.values);
    let h1_norm_sq = vx.values.iter().zip(&ax).map(|(v, a)| v * a).sum::<f64>()
        + vy.values.iter().zip(&ay).map(|(v, a)| v * a).sum::<f64>();
    let values = vx
        .values
        .iter()
        .zip(&vy.values)
        .map(|(x, y)| Point::new(*x, *y))
        .collect();
    Ok(ExtensionSolution {
        velocity: VectorField { values },
        h1_norm_sq,
    })
}

/// Conservation and discrete-maximum-principle audit of a state solve:
/// the net consistent flux over both loops must vanish to 1e-10 relative
/// and no interior node may exceed the boundary extrema.
pub fn verify_state(
    mesh: &Mesh,
    sigma: &Conductivity,
    u: &ScalarField,
) -> Result<(), FemError> {
    let mut net = 0.0;
    let mut scale = 0.0;
    for tag in [LoopTag::GammaE, LoopTag::GammaP] {
        for e in boundary_flux(mesh, sigma, u, tag)? {
            net += e.value * e.length;
            scale += (e.value * e.length).abs();
        }
    }
    if net.abs() > 1e-10 * scale.max(1e-300) {
        return Err(FemError::ConservationViolated { net, scale });
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..mesh.n_nodes() {
        if mesh.node_tags[i] != NodeTag::Interior {
            lo = lo.min(u.values[i]);
            hi = hi.max(u.values[i]);
        }
    }
    let tol = 1e-10 * (hi - lo).max(1e-300);
    for i in 0..mesh.n_nodes() {
        if mesh.node_tags[i] == NodeTag::Interior {
            let v = u.values[i];
            if v < lo - tol || v > hi + tol {
                return Err(FemError::MaxPrincipleViolated {
                    node: i,
                    value: v,
                    lo,
                    hi,
                });
            }
        }
    }
    Ok(())
}

/// L² error against an exact solution, degree-4 (6-point) quadrature.
pub fn l2_error(mesh: &Mesh, field: &ScalarField, exact: &dyn Fn(Point) -> f64) -> f64 {
    const W: [f64; 2] = [0.223381589678011, 0.109951743655322];
    const A: [f64; 2] = [0.445948490915965, 0.091576213509771];
    let mut acc = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let u = [
            field.values[tri[0]],
            field.values[tri[1]],
            field.values[tri[2]],
        ];
        let area = mesh.triangle_area(t);
        for set in 0..2 {
            let a = A[set];
            let b = 1.0 - 2.0 * a;
            for rot in 0..3 {
                let mut lambda = [a, a, a];
                lambda[rot] = b;
                let x = Point::new(
                    lambda[0] * p[0].x + lambda[1] * p[1].x + lambda[2] * p[2].x,
                    lambda[0] * p[0].y + lambda[1] * p[1].y + lambda[2] * p[2].y,
                );
                let u_h = lambda[0] * u[0] + lambda[1] * u[1] + lambda[2] * u[2];
                let diff = u_h - exact(x);
                acc += W[set] * area * diff * diff;
            }
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_data::fit_periodic_spline;
    use crate::geometry::{Circle, ClosedCurve};
    use crate::mesh::generate_mesh;
    use std::f64::consts::TAU;

    const CENTER: Point = Point::new(2.42, 0.0);
    const R_OUTER: f64 = 0.92;
    const R_INNER: f64 = 0.5;

    fn annulus_mesh(h: f64) -> Mesh {
        let outer = Circle::new(CENTER, R_OUTER);
        let inner = ClosedCurve::circle(Circle::new(CENTER, R_INNER), 256).unwrap();
        generate_mesh(outer, &inner, h).unwrap()
    }

    fn constant_spline(v: f64) -> PeriodicSpline {
        let theta: Vec<f64> = (0..8).map(|i| TAU * i as f64 / 8.0).collect();
        fit_periodic_spline(&theta, &vec![v; 8]).unwrap()
    }

    fn spline_of<F: Fn(f64) -> f64>(n: usize, f: F) -> PeriodicSpline {
        let theta: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
        let values: Vec<f64> = theta.iter().map(|t| f(*t)).collect();
        fit_periodic_spline(&theta, &values).unwrap()
    }

    /// u = c0 ln(ρ/R1)/ln(R2/R1): zero on the inner circle, c0 on the wall.
    fn log_solution(c0: f64) -> impl Fn(Point) -> f64 {
        move |p: Point| {
            let rho = p.dist(CENTER);
            c0 * (rho / R_INNER).ln() / (R_OUTER / R_INNER).ln()
        }
    }

    #[test]
    fn element_matrix_matches_hand_integration() {
        // unit right triangle (0,0), (1,0), (0,1), σ = 1:
        // ∇λ = (−1,−1), (1,0), (0,1), area ½ ⇒ K = A·∇λi·∇λj
        let mesh = Mesh {
            nodes: vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(0.0, 1.0),
            ],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![],
            node_tags: vec![NodeTag::Interior; 3],
            outer_circle: Circle::new(Point::new(0.0, 0.0), 1.0),
        };
        let k = assemble_stiffness(&mesh, &Conductivity::constant(1.0)).unwrap();
        let expect = [
            [1.0, -0.5, -0.5],
            [-0.5, 0.5, 0.0],
            [-0.5, 0.0, 0.5],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (k.get(i, j) - expect[i][j]).abs() < 1e-14,
                    "K[{i}][{j}] = {}",
                    k.get(i, j)
                );
            }
        }
    }

    #[test]
    fn stiffness_kernel_and_linearity_in_sigma() {
        let mesh = annulus_mesh(0.1);
        let k1 = assemble_stiffness(&mesh, &Conductivity::constant(1.0)).unwrap();
        let ones = vec![1.0; mesh.n_nodes()];
        let r = k1.matvec_alloc(&ones);
        let scale = k1.val.iter().cloned().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (i, v) in r.iter().enumerate() {
            assert!(v.abs() <= 1e-10 * scale, "row {i} sum {v}");
        }
        // σ doubled doubles K exactly under the centroid rule
        let k2 = assemble_stiffness(&mesh, &Conductivity::constant(2.0)).unwrap();
        for (a, b) in k1.val.iter().zip(&k2.val) {
            assert_eq!(2.0 * a, *b);
        }
        assert!(k1.asymmetry() <= 1e-12);
    }

    #[test]
    fn mixed_solve_with_zero_flux_is_constant() {
        let mesh = annulus_mesh(0.08);
        let u1 = constant_spline(0.0);
        let c = 1.7;
        let u = solve_state_mixed(
            &mesh,
            &Conductivity::constant(1.0),
            &u1,
            c,
            NeumannConvention::SigmaWeighted,
        )
        .unwrap();
        for v in &u.values {
            assert!((v - c).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_solve_converges_to_log_solution() {
        let c0 = 2.0;
        let du_dn = c0 / (R_OUTER * (R_OUTER / R_INNER).ln());
        let u1 = constant_spline(du_dn);
        let exact = log_solution(c0);
        let mut errs = Vec::new();
        for h in [0.08, 0.04] {
            let mesh = annulus_mesh(h);
            let u = solve_state_mixed(
                &mesh,
                &Conductivity::constant(1.0),
                &u1,
                0.0,
                NeumannConvention::SigmaWeighted,
            )
            .unwrap();
            errs.push(l2_error(&mesh, &u, &exact));
        }
        let ratio = errs[0] / errs[1];
        assert!(
            ratio >= 3.2,
            "L² errors {errs:?} do not show second-order decay (ratio {ratio})"
        );
    }

    #[test]
    fn mixed_solve_converges_for_inverse_r_solution() {
        // u = r²z solves ∇·((1/r)∇u) = 0: ∂_r((1/r)2rz) + ∂_z((1/r)r²) = 0
        let exact = |p: Point| p.x * p.x * p.y;
        let sigma = Conductivity::inverse_r(CENTER.x - 1.0, CENTER.x + 1.0);
        let mut errs = Vec::new();
        for h in [0.08, 0.04] {
            let mesh = annulus_mesh(h);
            let matrix = assemble_stiffness(&mesh, &sigma).unwrap();
            let rhs = assemble_boundary_load(&mesh, LoopTag::GammaE, &|q: &BoundaryQuadPoint| {
                let x = q.x;
                let n = x.sub(CENTER).scale(1.0 / x.sub(CENTER).norm());
                let grad = Point::new(2.0 * x.x * x.y, x.x * x.x);
                (1.0 / x.x) * grad.dot(n)
            })
            .unwrap();
            let constraints: Vec<(usize, f64)> = (0..mesh.n_nodes())
                .filter(|i| mesh.node_tags[*i] == NodeTag::GammaP)
                .map(|i| (i, exact(mesh.nodes[i])))
                .collect();
            let u = SparseSpdSystem {
                matrix,
                rhs,
                constraints,
            }
            .solve()
            .unwrap();
            errs.push(l2_error(&mesh, &u, &exact));
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio >= 3.2, "errors {errs:?}, ratio {ratio}");
    }

    #[test]
    fn dirichlet_solve_constant_and_log() {
        let mesh = annulus_mesh(0.06);
        let sigma = Conductivity::constant(1.0);
        let c = -0.4;
        let u = solve_state_dirichlet(&mesh, &sigma, &constant_spline(c), c).unwrap();
        for v in &u.values {
            assert!((v - c).abs() < 1e-10);
        }
        let c0 = 2.0;
        let exact = log_solution(c0);
        let u = solve_state_dirichlet(&mesh, &sigma, &constant_spline(c0), 0.0).unwrap();
        let err = l2_error(&mesh, &u, &exact);
        assert!(err < 2e-3, "L² error {err}");
    }

    #[test]
    fn dirichlet_solve_respects_maximum_principle() {
        let mesh = annulus_mesh(0.06);
        let u0 = spline_of(64, |t| t.cos());
        let c = 0.3;
        let u = solve_state_dirichlet(&mesh, &Conductivity::constant(1.0), &u0, c).unwrap();
        let lo = (-1.0_f64).min(c);
        let hi = 1.0_f64.max(c);
        let range = hi - lo;
        assert!(u.min() >= lo - 1e-10 * range, "min {} below {lo}", u.min());
        assert!(u.max() <= hi + 1e-10 * range, "max {} above {hi}", u.max());
    }

    #[test]
    fn adjoint_of_matched_data_vanishes() {
        let mesh = annulus_mesh(0.08);
        let sigma = Conductivity::constant(1.0);
        let c0 = 2.0;
        let du_dn = c0 / (R_OUTER * (R_OUTER / R_INNER).ln());
        let u = solve_state_mixed(
            &mesh,
            &sigma,
            &constant_spline(du_dn),
            0.0,
            NeumannConvention::SigmaWeighted,
        )
        .unwrap();
        // u0 := the trace the state actually attains on the wall; since the
        // discrete trace is not exactly constant, use its mean
        let wall: Vec<usize> = (0..mesh.n_nodes())
            .filter(|i| mesh.node_tags[*i] == NodeTag::GammaE)
            .collect();
        let mean: f64 = wall.iter().map(|i| u.values[*i]).sum::<f64>() / wall.len() as f64;
        let spread: f64 = wall
            .iter()
            .map(|i| (u.values[*i] - mean).abs())
            .fold(0.0, f64::max);
        let p = solve_adjoint(&mesh, &sigma, &u, &constant_spline(mean)).unwrap();
        let p_scale = p.values.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
        // p is driven only by the O(h²) trace wiggle
        assert!(
            p_scale <= 50.0 * spread + 1e-10,
            "adjoint magnitude {p_scale} vs trace spread {spread}"
        );
        // and with exactly matched data p ≡ 0
        let u_matched = ScalarField::new(&mesh, vec![mean; mesh.n_nodes()]).unwrap();
        let p0 = solve_adjoint(&mesh, &sigma, &u_matched, &constant_spline(mean)).unwrap();
        for v in &p0.values {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn adjoint_sign_follows_data_mismatch() {
        let mesh = annulus_mesh(0.08);
        let sigma = Conductivity::constant(1.0);
        let u = ScalarField::new(&mesh, vec![1.0; mesh.n_nodes()]).unwrap();
        // u − u0 = +1 on the wall ⇒ σ∂p/∂n > 0 there ⇒ p grows toward Γ_E
        let p = solve_adjoint(&mesh, &sigma, &u, &constant_spline(0.0)).unwrap();
        let max_on_wall = (0..mesh.n_nodes())
            .filter(|i| mesh.node_tags[*i] == NodeTag::GammaE)
            .map(|i| p.values[i])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(max_on_wall > 0.0, "wall adjoint max {max_on_wall}");
    }

    #[test]
    fn adjoint_green_identity() {
        let mesh = annulus_mesh(0.08);
        let sigma = Conductivity::constant(1.0);
        let du_dn = 2.0 / (R_OUTER * (R_OUTER / R_INNER).ln());
        let u = solve_state_mixed(
            &mesh,
            &sigma,
            &constant_spline(du_dn),
            0.0,
            NeumannConvention::SigmaWeighted,
        )
        .unwrap();
        let u0 = spline_of(32, |t| 1.8 + 0.1 * t.sin());
        let p = solve_adjoint(&mesh, &sigma, &u, &u0).unwrap();
        // ⟨σ∂p/∂n, w⟩_{Γ_E} = ⟨2(u−u0), w⟩_{Γ_E} for any discrete w with
        // w = 0 on Γ_P; both sides in their weak (nodal-functional) form
        let k = assemble_stiffness(&mesh, &sigma).unwrap();
        let t = k.matvec_alloc(&p.values);
        let rhs = assemble_boundary_load(&mesh, LoopTag::GammaE, &|q: &BoundaryQuadPoint| {
            let u_h = u.values[q.a] * (1.0 - q.s) + u.values[q.b] * q.s;
            2.0 * (u_h - u0.eval(q.theta))
        })
        .unwrap();
        let mut lhs_sum = 0.0;
        let mut rhs_sum = 0.0;
        for i in 0..mesh.n_nodes() {
            if mesh.node_tags[i] == NodeTag::GammaP {
                continue;
            }
            // deterministic pseudo-random lift values
            let w = (((i * 2654435761) % 1000) as f64 / 500.0) - 1.0;
            lhs_sum += t[i] * w;
            rhs_sum += rhs[i] * w;
        }
        let scale = rhs.iter().map(|v| v.abs()).sum::<f64>().max(1e-30);
        assert!(
            (lhs_sum - rhs_sum).abs() <= 1e-8 * scale,
            "Green identity gap {} (scale {scale})",
            (lhs_sum - rhs_sum).abs()
        );
    }

    #[test]
    fn flux_of_constant_field_vanishes() {
        let mesh = annulus_mesh(0.08);
        let u = ScalarField::new(&mesh, vec![3.0; mesh.n_nodes()]).unwrap();
        for tag in [LoopTag::GammaE, LoopTag::GammaP] {
            for e in boundary_flux(&mesh, &Conductivity::constant(1.0), &u, tag).unwrap() {
                assert!(e.value.abs() < 1e-10, "flux {}", e.value);
            }
        }
    }

    #[test]
    fn flux_matches_analytic_log_derivative() {
        let c0 = 2.0;
        let du_dn = c0 / (R_OUTER * (R_OUTER / R_INNER).ln());
        let mesh = annulus_mesh(0.02);
        let sigma = Conductivity::constant(1.0);
        let u = solve_state_dirichlet(&mesh, &sigma, &constant_spline(c0), 0.0).unwrap();
        let flux = boundary_flux(&mesh, &sigma, &u, LoopTag::GammaE).unwrap();
        for e in &flux {
            let rel = (e.value - du_dn).abs() / du_dn;
            assert!(rel < 1e-3, "edge flux {} vs {du_dn} (rel {rel})", e.value);
        }
    }

    #[test]
    fn flux_conservation_on_mixed_solve() {
        let mesh = annulus_mesh(0.05);
        let sigma = Conductivity::inverse_r(CENTER.x - 1.0, CENTER.x + 1.0);
        let u1 = spline_of(64, |t| -1.0 + 0.2 * (2.0 * t).cos());
        let u = solve_state_mixed(&mesh, &sigma, &u1, 0.0, NeumannConvention::SigmaWeighted)
            .unwrap();
        let mut total = 0.0;
        let mut scale = 0.0;
        for tag in [LoopTag::GammaE, LoopTag::GammaP] {
            for e in boundary_flux(&mesh, &sigma, &u, tag).unwrap() {
                total += e.value * e.length;
                scale += (e.value * e.length).abs();
            }
        }
        assert!(
            total.abs() <= 1e-10 * scale,
            "net flux {total} vs scale {scale}"
        );
    }

    #[test]
    fn extension_of_zero_gradient_is_zero() {
        let mesh = annulus_mesh(0.08);
        let n_edges = mesh.boundary_geometry(LoopTag::GammaP).unwrap().len();
        let sol = solve_extension(&mesh, &vec![Point::new(0.0, 0.0); n_edges]).unwrap();
        assert!(sol.velocity.max_norm() == 0.0);
        assert!(sol.h1_norm_sq == 0.0);
    }

    #[test]
    fn extension_descent_identity() {
        let mesh = annulus_mesh(0.06);
        let geo = mesh.boundary_geometry(LoopTag::GammaP).unwrap();
        // smooth synthetic gradient along Γ_P
        let grad: Vec<Point> = geo
            .iter()
            .map(|e| {
                let d = e.midpoint.sub(CENTER);
                let th = d.y.atan2(d.x);
                e.normal.scale(0.5 + 0.3 * (2.0 * th).cos())
            })
            .collect();
        let sol = solve_extension(&mesh, &grad).unwrap();
        // discrete pairing ∫_{Γ_P} g·V with the same trace quadrature
        let mut pairing = 0.0;
        for (e, g) in geo.iter().zip(&grad) {
            let v_avg = sol.velocity.values[e.a].add(sol.velocity.values[e.b]).scale(0.5);
            pairing += g.dot(v_avg) * e.length;
        }
        let rel = (pairing + sol.h1_norm_sq).abs() / sol.h1_norm_sq;
        assert!(rel <= 1e-9, "descent identity violated: {rel}");
        // velocity vanishes on the wall
        for i in 0..mesh.n_nodes() {
            if mesh.node_tags[i] == NodeTag::GammaE {
                assert!(sol.velocity.values[i].norm() == 0.0);
            }
        }
    }

    #[test]
    fn extension_components_decouple_bitwise() {
        let mesh = annulus_mesh(0.08);
        let geo = mesh.boundary_geometry(LoopTag::GammaP).unwrap();
        let grad: Vec<Point> = geo
            .iter()
            .map(|e| e.normal.scale(0.7))
            .collect();
        let sol = solve_extension(&mesh, &grad).unwrap();
        // the two scalar problems, solved independently
        let unit = Conductivity::constant(1.0);
        let matrix = add_csr(&assemble_stiffness(&mesh, &unit).unwrap(), &assemble_mass(&mesh));
        let constraints: Vec<(usize, f64)> = dirichlet_nodes(&mesh, LoopTag::GammaE)
            .into_iter()
            .map(|i| (i, 0.0))
            .collect();
        let mut rhs_x = vec![0.0; mesh.n_nodes()];
        let mut rhs_y = vec![0.0; mesh.n_nodes()];
        for (e, g) in geo.iter().zip(&grad) {
            let w = e.length / 2.0;
            rhs_x[e.a] -= g.x * w;
            rhs_x[e.b] -= g.x * w;
            rhs_y[e.a] -= g.y * w;
            rhs_y[e.b] -= g.y * w;
        }
        let vx = SparseSpdSystem {
            matrix: matrix.clone(),
            rhs: rhs_x,
            constraints: constraints.clone(),
        }
        .solve()
        .unwrap();
        let vy = SparseSpdSystem {
            matrix,
            rhs: rhs_y,
            constraints,
        }
        .solve()
        .unwrap();
        for i in 0..mesh.n_nodes() {
            assert_eq!(sol.velocity.values[i].x, vx.values[i]);
            assert_eq!(sol.velocity.values[i].y, vy.values[i]);
        }
    }

    #[test]
    fn constrained_system_is_positive_definite() {
        let outer = Circle::new(CENTER, R_OUTER);
        let inner = ClosedCurve::circle(Circle::new(CENTER, R_INNER), 32).unwrap();
        let mesh = generate_mesh(outer, &inner, 0.13).unwrap();
        assert!(mesh.n_nodes() <= 500, "want a small mesh, got {}", mesh.n_nodes());
        let k = assemble_stiffness(&mesh, &Conductivity::inverse_r(1.0, 4.0)).unwrap();
        // eliminate Γ_P rows/cols, keep the rest
        let free: Vec<usize> = (0..mesh.n_nodes())
            .filter(|i| mesh.node_tags[*i] != NodeTag::GammaP)
            .collect();
        let mut dense = nalgebra::DMatrix::zeros(free.len(), free.len());
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                dense[(r, c)] = k.get(i, j);
            }
        }
        let eig = dense.symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_eig > 0.0, "smallest eigenvalue {min_eig}");
    }

    #[test]
    fn flux_total_matches_neumann_input() {
        let mesh = annulus_mesh(0.06);
        let sigma = Conductivity::constant(1.0);
        let u1 = spline_of(32, |t| -1.0 + 0.5 * t.sin());
        let rhs = assemble_boundary_load(&mesh, LoopTag::GammaE, &|q: &BoundaryQuadPoint| {
            sigma.eval(q.x) * u1.eval(q.theta)
        })
        .unwrap();
        let input: f64 = rhs.iter().sum();
        let u = solve_state_mixed(&mesh, &sigma, &u1, 0.0, NeumannConvention::SigmaWeighted)
            .unwrap();
        let wall_flux: f64 = boundary_flux(&mesh, &sigma, &u, LoopTag::GammaE)
            .unwrap()
            .iter()
            .map(|e| e.value * e.length)
            .sum();
        let rel = (wall_flux - input).abs() / input.abs();
        assert!(rel <= 1e-9, "wall flux {wall_flux} vs input {input}");
    }
}
