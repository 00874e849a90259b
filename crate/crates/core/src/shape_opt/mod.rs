//! Adjoint shape-gradient descent on the Cauchy-data misfit: criterion
//! evaluation on the wall, the boundary gradient density σ(∂p/∂n)(∂u/∂n),
//! line-searched descent over deforming meshes with smoothing and remesh
//! maintenance, level-line extraction, recovery of the boundary flux
//! constant by continuation, and the poloidal-field post-processor.

mod level_set;

use std::collections::HashMap;

use crate::boundary_data::{BoundarySamples, Conductivity, PeriodicSpline};
use crate::error::{FemError, OptError};
use crate::fem::{
    boundary_flux, boundary_quadrature, nodal_flux_density, solve_adjoint, solve_dirichlet_nodal,
    solve_extension, solve_state_dirichlet, solve_state_mixed, EdgeFlux, NeumannConvention,
    ScalarField, VectorField,
};
use crate::geometry::{ClosedCurve, Point};
use crate::mesh::{generate_mesh, LoopTag, Mesh};

pub use level_set::{extract_level_set, locate_point, sample_field};

/// Which wall misfit drives the descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    /// J = ∫_{Γ_E} (u − u₀)² with the mixed state (Neumann data on the wall)
    #[default]
    DirichletMisfit,
    /// J = ∫_{Γ_E} (∂u/∂n − u₁)² with the double-Dirichlet state
    NeumannMisfit,
}

#[derive(Debug, Clone)]
pub struct OptimizationConfig {
    pub criterion: Criterion,
    /// flux level prescribed on the free boundary
    pub c: f64,
    /// stop when |ΔJ| < epsilon_stop_rel · J₀
    pub epsilon_stop_rel: f64,
    pub max_iters: usize,
    pub t0: f64,
    /// backtracking factor in (0, 1)
    pub beta: f64,
    /// smooth Γ_P every this many iterations (0 disables)
    pub smooth_every: usize,
    pub remesh_min_angle_deg: f64,
    pub remesh_edge_ratio: f64,
    pub mesh_h: f64,
    pub neumann_convention: NeumannConvention,
    pub t_min: f64,
    /// audit every state solve for flux conservation and the discrete
    /// maximum principle (slower; used by the acceptance gate)
    pub verify_solves: bool,
}

impl OptimizationConfig {
    pub fn new(mesh_h: f64, c: f64) -> Self {
        Self {
            criterion: Criterion::DirichletMisfit,
            c,
            epsilon_stop_rel: 1e-8,
            max_iters: 200,
            t0: 0.5,
            beta: 0.5,
            smooth_every: 10,
            remesh_min_angle_deg: 10.0,
            remesh_edge_ratio: 10.0,
            mesh_h,
            neumann_convention: NeumannConvention::SigmaWeighted,
            t_min: 1e-10,
            verify_solves: false,
        }
    }

    pub fn validate(&self) -> Result<(), OptError> {
        let ok = self.mesh_h > 0.0
            && self.t0 > 0.0
            && self.beta > 0.0
            && self.beta < 1.0
            && self.epsilon_stop_rel > 0.0
            && self.t_min > 0.0;
        if ok {
            Ok(())
        } else {
            Err(OptError::Stagnation {
                t_min: self.t_min,
                j: f64::NAN,
            })
        }
    }
}

/// Per-iteration record; `gamma_p` snapshots the free boundary.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iter: usize,
    pub j: f64,
    pub step: f64,
    pub min_angle_deg: f64,
    pub grad_norm: f64,
    /// |∫ g(V·n) + ‖V‖²_{H¹}| / ‖V‖²_{H¹} for the accepted direction
    pub descent_identity_gap: f64,
    pub remeshed: bool,
    pub gamma_p: ClosedCurve,
}

#[derive(Debug, Clone, Default)]
pub struct OptimizationHistory {
    pub records: Vec<IterationRecord>,
}

impl OptimizationHistory {
    pub fn last_j(&self) -> Option<f64> {
        self.records.last().map(|r| r.j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    Stagnated,
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub gamma_p: ClosedCurve,
    pub history: OptimizationHistory,
    pub stop: StopReason,
    pub mesh: Mesh,
    pub state: ScalarField,
    pub j: f64,
}

/// Wall misfit ∫_{Γ_E} (u − u₀)² ds (2-point Gauss, arc measure).
pub fn evaluate_j(mesh: &Mesh, u: &ScalarField, u0: &PeriodicSpline) -> Result<f64, FemError> {
    let mut acc = 0.0;
    for q in boundary_quadrature(mesh, LoopTag::GammaE)? {
        let u_h = u.values[q.a] * (1.0 - q.s) + u.values[q.b] * q.s;
        let d = u_h - u0.eval(q.theta);
        acc += q.weight * d * d;
    }
    Ok(acc)
}

/// Wall misfit ∫_{Γ_E} (∂u/∂n − u₁)² ds from the consistent flux
/// (σ∂u/∂n per edge, divided pointwise by σ).
pub fn evaluate_j_neumann(
    mesh: &Mesh,
    sigma: &Conductivity,
    flux: &[EdgeFlux],
    u1: &PeriodicSpline,
) -> Result<f64, FemError> {
    let by_edge: HashMap<(usize, usize), f64> =
        flux.iter().map(|e| ((e.a, e.b), e.value)).collect();
    let mut acc = 0.0;
    for q in boundary_quadrature(mesh, LoopTag::GammaE)? {
        let sigma_flux = by_edge.get(&(q.a, q.b)).copied().ok_or({
            FemError::FieldSizeMismatch {
                got: flux.len(),
                nodes: mesh.n_nodes(),
            }
        })?;
        let d = sigma_flux / sigma.eval(q.x) - u1.eval(q.theta);
        acc += q.weight * d * d;
    }
    Ok(acc)
}

/// Boundary gradient density on Γ_P: per-edge scalar
/// g = σ(∂p/∂n)(∂u/∂n) and the vector g·n used as the extension load.
/// The descent direction is −g·n.
#[derive(Debug, Clone)]
pub struct GradientDensity {
    /// aligned with `mesh.boundary_geometry(GammaP)`
    pub g: Vec<f64>,
    /// g·n per edge, n outward (into the hole)
    pub vectors: Vec<Point>,
    pub edge_lengths: Vec<f64>,
}

impl GradientDensity {
    /// Discrete pairing ∫_{Γ_P} g (V·n) ds — the shape derivative dJ(Ω; V).
    pub fn pairing(&self, mesh: &Mesh, velocity: &VectorField) -> Result<f64, FemError> {
        let geo = mesh.boundary_geometry(LoopTag::GammaP)?;
        if geo.len() != self.vectors.len() {
            return Err(FemError::FieldSizeMismatch {
                got: self.vectors.len(),
                nodes: geo.len(),
            });
        }
        let mut acc = 0.0;
        for (e, gv) in geo.iter().zip(&self.vectors) {
            let v_avg = velocity.values[e.a]
                .add(velocity.values[e.b])
                .scale(0.5);
            acc += gv.dot(v_avg) * e.length;
        }
        Ok(acc)
    }
}

/// σ(∂p/∂n)(∂u/∂n) per Γ_P edge from consistent fluxes. `sign` flips the
/// density for the inverted (Neumann-misfit) criterion.
fn gradient_density_signed(
    mesh: &Mesh,
    sigma: &Conductivity,
    u: &ScalarField,
    p: &ScalarField,
    sign: f64,
) -> Result<GradientDensity, FemError> {
    let flux_u = boundary_flux(mesh, sigma, u, LoopTag::GammaP)?;
    let flux_p = boundary_flux(mesh, sigma, p, LoopTag::GammaP)?;
    let geo = mesh.boundary_geometry(LoopTag::GammaP)?;
    let mut g = Vec::with_capacity(geo.len());
    let mut vectors = Vec::with_capacity(geo.len());
    let mut edge_lengths = Vec::with_capacity(geo.len());
    for ((e, qu), qp) in geo.iter().zip(&flux_u).zip(&flux_p) {
        // qu, qp carry σ∂·/∂n, so one σ factor must come back out
        let value = sign * qu.value * qp.value / sigma.eval(e.midpoint);
        g.push(value);
        vectors.push(e.normal.scale(value));
        edge_lengths.push(e.length);
    }
    Ok(GradientDensity {
        g,
        vectors,
        edge_lengths,
    })
}

/// Gradient density of the primary (Dirichlet-misfit) criterion.
pub fn shape_gradient(
    mesh: &Mesh,
    sigma: &Conductivity,
    u: &ScalarField,
    p: &ScalarField,
) -> Result<GradientDensity, FemError> {
    gradient_density_signed(mesh, sigma, u, p, 1.0)
}

/// Backtracking step: shrink t from t₀ by β until the deformed mesh is
/// valid and the re-evaluated J decreases below `j_ref`.
pub fn descent_step(
    mesh: &Mesh,
    velocity: &VectorField,
    j_ref: f64,
    config: &OptimizationConfig,
    evaluate: &dyn Fn(&Mesh) -> Result<(ScalarField, f64), OptError>,
) -> Result<(Mesh, ScalarField, f64, f64), OptError> {
    let mut t = config.t0;
    while t >= config.t_min {
        match mesh.deform(&velocity.values, t) {
            Ok(candidate) => {
                let (state, j_new) = evaluate(&candidate)?;
                if j_new < j_ref {
                    return Ok((candidate, state, t, j_new));
                }
            }
            Err(crate::error::MeshError::InvertedTriangle { .. }) => {}
            Err(other) => return Err(other.into()),
        }
        t *= config.beta;
    }
    Err(OptError::Stagnation {
        t_min: config.t_min,
        j: j_ref,
    })
}

struct Pipeline<'a> {
    sigma: &'a Conductivity,
    u0: PeriodicSpline,
    u1: PeriodicSpline,
    config: &'a OptimizationConfig,
}

impl Pipeline<'_> {
    fn solve_state(&self, mesh: &Mesh) -> Result<ScalarField, OptError> {
        Ok(match self.config.criterion {
            Criterion::DirichletMisfit => solve_state_mixed(
                mesh,
                self.sigma,
                &self.u1,
                self.config.c,
                self.config.neumann_convention,
            )?,
            Criterion::NeumannMisfit => {
                solve_state_dirichlet(mesh, self.sigma, &self.u0, self.config.c)?
            }
        })
    }

    fn eval(&self, mesh: &Mesh, u: &ScalarField) -> Result<f64, OptError> {
        Ok(match self.config.criterion {
            Criterion::DirichletMisfit => evaluate_j(mesh, u, &self.u0)?,
            Criterion::NeumannMisfit => {
                let flux = boundary_flux(mesh, self.sigma, u, LoopTag::GammaE)?;
                evaluate_j_neumann(mesh, self.sigma, &flux, &self.u1)?
            }
        })
    }

    fn state_and_j(&self, mesh: &Mesh) -> Result<(ScalarField, f64), OptError> {
        let u = self.solve_state(mesh)?;
        if self.config.verify_solves {
            crate::fem::verify_state(mesh, self.sigma, &u)?;
        }
        let j = self.eval(mesh, &u)?;
        Ok((u, j))
    }

    fn adjoint(&self, mesh: &Mesh, u: &ScalarField) -> Result<ScalarField, OptError> {
        Ok(match self.config.criterion {
            Criterion::DirichletMisfit => solve_adjoint(mesh, self.sigma, u, &self.u0)?,
            Criterion::NeumannMisfit => {
                // Dirichlet data p = 2(∂u/∂n − u₁)/σ on the wall, p = 0 on Γ_P
                let density: HashMap<usize, f64> =
                    nodal_flux_density(mesh, self.sigma, u, LoopTag::GammaE)?
                        .into_iter()
                        .collect();
                let values: HashMap<usize, f64> = density
                    .iter()
                    .map(|(&i, &sigma_flux)| {
                        let s = self.sigma.eval(mesh.nodes[i]);
                        let u1_here = self.u1.eval(mesh.node_angle(i));
                        (i, 2.0 * (sigma_flux / s - u1_here) / s)
                    })
                    .collect();
                solve_dirichlet_nodal(mesh, self.sigma, &|i| values[&i], 0.0)?
            }
        })
    }

    fn gradient(
        &self,
        mesh: &Mesh,
        u: &ScalarField,
        p: &ScalarField,
    ) -> Result<GradientDensity, FemError> {
        let sign = match self.config.criterion {
            Criterion::DirichletMisfit => 1.0,
            Criterion::NeumannMisfit => -1.0,
        };
        gradient_density_signed(mesh, self.sigma, u, p, sign)
    }
}

/// Moving-average smoothing of the Γ_P nodes, kept only when J does not
/// increase.
fn try_smooth(
    pipeline: &Pipeline,
    mesh: &Mesh,
    j_ref: f64,
) -> Result<Option<(Mesh, ScalarField, f64)>, OptError> {
    let order = mesh.boundary_loop(LoopTag::GammaP)?;
    let n = order.len();
    let mut velocity = vec![Point::new(0.0, 0.0); mesh.n_nodes()];
    for (k, &i) in order.iter().enumerate() {
        let prev = mesh.nodes[order[(k + n - 1) % n]];
        let here = mesh.nodes[i];
        let next = mesh.nodes[order[(k + 1) % n]];
        let avg = Point::new(
            (prev.x + here.x + next.x) / 3.0,
            (prev.y + here.y + next.y) / 3.0,
        );
        velocity[i] = avg.sub(here);
    }
    match mesh.deform(&velocity, 1.0) {
        Ok(smoothed) => {
            let (u, j) = pipeline.state_and_j(&smoothed)?;
            if j <= j_ref {
                Ok(Some((smoothed, u, j)))
            } else {
                Ok(None)
            }
        }
        Err(crate::error::MeshError::InvertedTriangle { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Shape-gradient descent from an initial free boundary.
///
/// The recorded J sequence is strictly decreasing; the loop stops when
/// |ΔJ| < ε·J₀, on the iteration cap, or when no step achieves descent.
pub fn optimize(
    samples: &BoundarySamples,
    sigma: &Conductivity,
    config: &OptimizationConfig,
    initial: &ClosedCurve,
) -> Result<OptimizeOutcome, OptError> {
    config.validate()?;
    let pipeline = Pipeline {
        sigma,
        u0: samples.u0_spline()?,
        u1: samples.u1_spline()?,
        config,
    };
    let circle = samples.circle();
    let mut mesh = generate_mesh(circle, initial, config.mesh_h)?;
    let (mut u, mut j) = pipeline.state_and_j(&mesh)?;
    let j0 = j;

    let mut history = OptimizationHistory::default();
    history.records.push(IterationRecord {
        iter: 0,
        j,
        step: 0.0,
        min_angle_deg: mesh.quality().min_angle_deg,
        grad_norm: 0.0,
        descent_identity_gap: 0.0,
        remeshed: false,
        gamma_p: mesh.boundary_curve(LoopTag::GammaP)?,
    });
    let mut stop = StopReason::MaxIterations;
    let mut pending_remesh_flag = false;

    for iter in 1..=config.max_iters {
        if config.smooth_every > 0 && iter % config.smooth_every == 0 {
            if let Some((m, su, sj)) = try_smooth(&pipeline, &mesh, j)? {
                mesh = m;
                u = su;
                j = sj;
            }
        }

        let p = pipeline.adjoint(&mesh, &u)?;
        let gd = pipeline.gradient(&mesh, &u, &p)?;
        let ext = solve_extension(&mesh, &gd.vectors)?;
        let grad_norm = ext.h1_norm_sq.sqrt();
        let pairing = gd.pairing(&mesh, &ext.velocity)?;
        let identity_gap = if ext.h1_norm_sq > 0.0 {
            (pairing + ext.h1_norm_sq).abs() / ext.h1_norm_sq
        } else {
            0.0
        };

        let last_recorded = history.last_j().unwrap_or(j);
        let j_ref = j.min(last_recorded);
        let step_result = descent_step(&mesh, &ext.velocity, j_ref, config, &|m| {
            pipeline.state_and_j(m)
        });
        let (new_mesh, new_u, t_used, j_new) = match step_result {
            Ok(r) => r,
            Err(OptError::Stagnation { .. }) => {
                stop = StopReason::Stagnated;
                break;
            }
            Err(e) => return Err(e),
        };
        let j_prev_recorded = history.last_j().unwrap_or(j0);
        mesh = new_mesh;
        u = new_u;
        j = j_new;
        history.records.push(IterationRecord {
            iter,
            j,
            step: t_used,
            min_angle_deg: mesh.quality().min_angle_deg,
            grad_norm,
            descent_identity_gap: identity_gap,
            remeshed: pending_remesh_flag,
            gamma_p: mesh.boundary_curve(LoopTag::GammaP)?,
        });
        pending_remesh_flag = false;

        if (j_prev_recorded - j).abs() < config.epsilon_stop_rel * j0 {
            stop = StopReason::Converged;
            break;
        }

        let q = mesh.quality();
        if q.min_angle_deg < config.remesh_min_angle_deg
            || q.edge_ratio() > config.remesh_edge_ratio
        {
            let curve = mesh.boundary_curve(LoopTag::GammaP)?;
            mesh = generate_mesh(circle, &curve, config.mesh_h)?;
            let refreshed = pipeline.state_and_j(&mesh)?;
            u = refreshed.0;
            j = refreshed.1;
            pending_remesh_flag = true;
        }
    }

    // with no accepted step the free boundary is the caller's curve
    let gamma_p = if history.records.len() == 1 {
        initial.clone()
    } else {
        mesh.boundary_curve(LoopTag::GammaP)?
    };
    Ok(OptimizeOutcome {
        gamma_p,
        history,
        stop,
        mesh,
        state: u,
        j,
    })
}

/// Result of the continuation recovery of the flux constant.
#[derive(Debug, Clone)]
pub struct CRecovery {
    pub c_est: f64,
    pub gamma_p: ClosedCurve,
    /// limiter point where u attains its maximum
    pub contact: Point,
    /// distance from the contact point to the recovered curve
    pub contact_gap: f64,
    pub inside_limiter: bool,
    pub outcome: OptimizeOutcome,
}

/// Runs the continuation: optimize with an overshoot level c₁ ≫ c, read
/// the true level off the maximum of u along the limiter, and extract that
/// level line as the plasma boundary.
pub fn recover_constant_c(
    samples: &BoundarySamples,
    sigma: &Conductivity,
    limiter: &ClosedCurve,
    c1: f64,
    config: &OptimizationConfig,
    initial: &ClosedCurve,
) -> Result<CRecovery, OptError> {
    let circle = samples.circle();
    for p in limiter.points() {
        if p.dist(circle.center) >= circle.radius {
            return Err(OptError::LimiterOutsideDomain { x: p.x, y: p.y });
        }
    }
    let mut cfg = config.clone();
    cfg.c = c1;
    let outcome = optimize(samples, sigma, &cfg, initial)?;
    let mesh = &outcome.mesh;
    let u = &outcome.state;

    // densified sampling of u along the limiter polyline
    let pts = limiter.points();
    let n = pts.len();
    let mut best: Option<(f64, Point)> = None;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let len = a.dist(b);
        let sub = ((4.0 * len / config.mesh_h).ceil() as usize).max(1);
        for k in 0..sub {
            let s = k as f64 / sub as f64;
            let x = a.add(b.sub(a).scale(s));
            let value = sample_field(mesh, u, x)
                .ok_or(OptError::LimiterOutsideDomain { x: x.x, y: x.y })?;
            let better = match &best {
                Some((v, _)) => value > *v,
                None => true,
            };
            if better {
                best = Some((value, x));
            }
        }
    }
    let (c_est, contact) = best.expect("limiter has vertices");

    let gamma_p = extract_level_set(mesh, u, c_est)?;
    let contact_gap = gamma_p.distance_to(contact);
    let tol = config.mesh_h / 2.0;
    let inside_limiter = gamma_p
        .points()
        .iter()
        .all(|p| limiter.contains(*p) || limiter.distance_to(*p) <= tol);
    Ok(CRecovery {
        c_est,
        gamma_p,
        contact,
        contact_gap,
        inside_limiter,
        outcome,
    })
}

/// Poloidal field per triangle: B_r = −(1/r)∂u/∂z, B_z = (1/r)∂u/∂r.
pub fn compute_b(mesh: &Mesh, u: &ScalarField) -> Result<Vec<(f64, f64)>, FemError> {
    for (i, p) in mesh.nodes.iter().enumerate() {
        if p.x <= 0.0 {
            return Err(FemError::NonPositiveRadius { node: i, r: p.x });
        }
    }
    if u.values.len() != mesh.n_nodes() {
        return Err(FemError::FieldSizeMismatch {
            got: u.values.len(),
            nodes: mesh.n_nodes(),
        });
    }
    Ok((0..mesh.n_triangles())
        .map(|t| {
            let grad = u.gradient_on(mesh, t);
            let r = mesh.triangle_centroid(t).x;
            (-grad.y / r, grad.x / r)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_data::fit_periodic_spline;
    use crate::geometry::{hausdorff_distance, Circle};
    use std::f64::consts::TAU;

    const CENTER: Point = Point::new(2.42, 0.0);
    const R_OUTER: f64 = 0.92;

    fn wall() -> Circle {
        Circle::new(CENTER, R_OUTER)
    }

    fn constant_spline(v: f64) -> PeriodicSpline {
        let theta: Vec<f64> = (0..8).map(|i| TAU * i as f64 / 8.0).collect();
        fit_periodic_spline(&theta, &vec![v; 8]).unwrap()
    }

    fn annulus_samples(r1_true: f64, c0: f64, n: usize) -> BoundarySamples {
        // u = −c1·R2·ln(ρ/R1): u0 ≡ −c0 and u1 ≡ −c1 on the wall, u = 0 on ρ = R1
        let c1 = c0 / (R_OUTER * (R_OUTER / r1_true).ln());
        let theta: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
        BoundarySamples::new(theta, vec![-c0; n], vec![-c1; n], CENTER, R_OUTER).unwrap()
    }

    #[test]
    fn evaluate_j_constant_offset_gives_wall_length() {
        let inner = ClosedCurve::circle(Circle::new(CENTER, 0.5), 64).unwrap();
        let mesh = generate_mesh(wall(), &inner, 0.05).unwrap();
        let u0 = constant_spline(0.0);
        let u_match = ScalarField::new(&mesh, vec![0.0; mesh.n_nodes()]).unwrap();
        assert_eq!(evaluate_j(&mesh, &u_match, &u0).unwrap(), 0.0);
        let u_off = ScalarField::new(&mesh, vec![1.0; mesh.n_nodes()]).unwrap();
        let j = evaluate_j(&mesh, &u_off, &u0).unwrap();
        let expect = TAU * R_OUTER;
        assert!(
            (j - expect).abs() <= 1e-6 * expect,
            "J = {j} vs 2πρ_e = {expect}"
        );
    }

    #[test]
    fn evaluate_j_quadrature_is_converged() {
        let inner = ClosedCurve::circle(Circle::new(CENTER, 0.5), 64).unwrap();
        let mesh = generate_mesh(wall(), &inner, 0.04).unwrap();
        let theta: Vec<f64> = (0..64).map(|i| TAU * i as f64 / 64.0).collect();
        let vals: Vec<f64> = theta.iter().map(|t| 0.3 * (2.0 * t).cos()).collect();
        let u0 = fit_periodic_spline(&theta, &vals).unwrap();
        let u = ScalarField::new(
            &mesh,
            mesh.nodes.iter().map(|p| 0.1 * p.y).collect(),
        )
        .unwrap();
        let j = evaluate_j(&mesh, &u, &u0).unwrap();
        // dense per-edge Simpson on the same piecewise-linear trace
        let mut dense = 0.0;
        for e in mesh.boundary_geometry(LoopTag::GammaE).unwrap() {
            let pa = mesh.nodes[e.a];
            let pb = mesh.nodes[e.b];
            let ta = {
                let d = pa.sub(CENTER);
                d.y.atan2(d.x)
            };
            let dt = crate::geometry::wrap_angle({
                let d = pb.sub(CENTER);
                d.y.atan2(d.x)
            } - ta);
            let arc = R_OUTER * dt;
            let m = 32;
            for k in 0..=m {
                let s = k as f64 / m as f64;
                let w = if k == 0 || k == m {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let x = pa.add(pb.sub(pa).scale(s));
                let th = {
                    let d = x.sub(CENTER);
                    d.y.atan2(d.x)
                };
                let u_h = u.values[e.a] * (1.0 - s) + u.values[e.b] * s;
                let diff = u_h - u0.eval(th);
                dense += w * diff * diff * arc / (3.0 * m as f64);
            }
        }
        let rel = (j - dense).abs() / dense;
        assert!(rel <= 1e-8, "2-pt Gauss vs dense Simpson: rel {rel}");
    }

    #[test]
    fn evaluate_j_neumann_cases() {
        let inner = ClosedCurve::circle(Circle::new(CENTER, 0.5), 64).unwrap();
        let mesh = generate_mesh(wall(), &inner, 0.05).unwrap();
        let sigma = Conductivity::constant(1.0);
        let geo = mesh.boundary_geometry(LoopTag::GammaE).unwrap();
        let u1 = constant_spline(-1.5);
        let flux_match: Vec<EdgeFlux> = geo
            .iter()
            .map(|e| EdgeFlux {
                a: e.a,
                b: e.b,
                midpoint: e.midpoint,
                length: e.length,
                value: -1.5,
            })
            .collect();
        let j = evaluate_j_neumann(&mesh, &sigma, &flux_match, &u1).unwrap();
        assert!(j.abs() < 1e-28);
        let flux_off: Vec<EdgeFlux> = flux_match
            .iter()
            .map(|e| EdgeFlux {
                value: e.value + 1.0,
                ..*e
            })
            .collect();
        let j = evaluate_j_neumann(&mesh, &sigma, &flux_off, &u1).unwrap();
        let expect = TAU * R_OUTER;
        assert!((j - expect).abs() <= 1e-6 * expect, "J = {j}");
    }

    #[test]
    fn gradient_density_zero_for_zero_adjoint() {
        let inner = ClosedCurve::circle(Circle::new(CENTER, 0.5), 64).unwrap();
        let mesh = generate_mesh(wall(), &inner, 0.06).unwrap();
        let sigma = Conductivity::constant(1.0);
        let u = ScalarField::new(&mesh, mesh.nodes.iter().map(|p| p.x).collect()).unwrap();
        let p = ScalarField::new(&mesh, vec![0.0; mesh.n_nodes()]).unwrap();
        let gd = shape_gradient(&mesh, &sigma, &u, &p).unwrap();
        for g in &gd.g {
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_density_constant_on_symmetric_annulus() {
        let samples = annulus_samples(0.5, 2.0, 128);
        let sigma = Conductivity::constant(1.0);
        let config = OptimizationConfig::new(0.02, 0.0);
        let pipeline = Pipeline {
            sigma: &sigma,
            u0: samples.u0_spline().unwrap(),
            u1: samples.u1_spline().unwrap(),
            config: &config,
        };
        // start away from the optimum so the density is nonzero
        let inner = ClosedCurve::circle(Circle::new(CENTER, 0.42), 256).unwrap();
        let mesh = generate_mesh(wall(), &inner, 0.02).unwrap();
        let (u, _) = pipeline.state_and_j(&mesh).unwrap();
        let p = pipeline.adjoint(&mesh, &u).unwrap();
        let gd = pipeline.gradient(&mesh, &u, &p).unwrap();
        let mean: f64 = gd.g.iter().sum::<f64>() / gd.g.len() as f64;
        let spread = gd
            .g
            .iter()
            .map(|g| (g - mean).abs())
            .fold(0.0_f64, f64::max);
        assert!(
            spread <= 0.02 * mean.abs(),
            "density spread {spread} vs mean {mean}"
        );
    }

    #[test]
    fn finite_difference_gradient_check_coarse() {
        let samples = annulus_samples(0.5, 2.0, 128);
        let sigma = Conductivity::constant(1.0);
        let config = OptimizationConfig::new(0.04, 0.0);
        let pipeline = Pipeline {
            sigma: &sigma,
            u0: samples.u0_spline().unwrap(),
            u1: samples.u1_spline().unwrap(),
            config: &config,
        };
        let inner = ClosedCurve::circle(Circle::new(CENTER, 0.45), 256).unwrap();
        let mesh = generate_mesh(wall(), &inner, 0.04).unwrap();
        let (u, j) = pipeline.state_and_j(&mesh).unwrap();
        let p = pipeline.adjoint(&mesh, &u).unwrap();
        let gd = pipeline.gradient(&mesh, &u, &p).unwrap();
        // smooth test velocity from the extension of a synthetic density
        let geo = mesh.boundary_geometry(LoopTag::GammaP).unwrap();
        let load: Vec<Point> = geo
            .iter()
            .map(|e| {
                let th = {
                    let d = e.midpoint.sub(CENTER);
                    d.y.atan2(d.x)
                };
                e.normal.scale(1.0 + 0.4 * (2.0 * th).cos())
            })
            .collect();
        let ext = solve_extension(&mesh, &load).unwrap();
        let v = ext.velocity;
        let dj = gd.pairing(&mesh, &v).unwrap();
        for t in [1e-3, 1e-4] {
            let moved = mesh.deform(&v.values, t).unwrap();
            let (_, jt) = pipeline.state_and_j(&moved).unwrap();
            let fd = (jt - j) / t;
            let rel = (fd - dj).abs() / dj.abs();
            println!("t={t:.0e}: FD={fd:.8e} dJ={dj:.8e} rel={rel:.3e}");
            assert!(rel < 5e-2, "t={t}: FD {fd} vs dJ {dj} (rel {rel})");
        }
    }

    #[test]
    fn descent_step_cases() {
        let samples = annulus_samples(0.5, 2.0, 64);
        let sigma = Conductivity::constant(1.0);
        let config = OptimizationConfig::new(0.05, 0.0);
        let pipeline = Pipeline {
            sigma: &sigma,
            u0: samples.u0_spline().unwrap(),
            u1: samples.u1_spline().unwrap(),
            config: &config,
        };
        let inner = ClosedCurve::circle(Circle::new(CENTER, 0.45), 128).unwrap();
        let mesh = generate_mesh(wall(), &inner, 0.05).unwrap();
        let (u, j) = pipeline.state_and_j(&mesh).unwrap();
        // zero velocity stagnates
        let zero = VectorField::zeros(&mesh);
        assert!(matches!(
            descent_step(&mesh, &zero, j, &config, &|m| pipeline.state_and_j(m)),
            Err(OptError::Stagnation { .. })
        ));
        // a genuine descent direction is accepted with t below the huge t0
        let p = pipeline.adjoint(&mesh, &u).unwrap();
        let gd = pipeline.gradient(&mesh, &u, &p).unwrap();
        let ext = solve_extension(&mesh, &gd.vectors).unwrap();
        let mut big = config.clone();
        big.t0 = 1e4;
        let (_, _, t_used, j_new) =
            descent_step(&mesh, &ext.velocity, j, &big, &|m| pipeline.state_and_j(m)).unwrap();
        assert!(j_new < j);
        assert!(t_used < big.t0);
    }

    #[test]
    fn optimize_zero_iterations_returns_initial_state() {
        let samples = annulus_samples(0.5, 2.0, 64);
        let sigma = Conductivity::constant(1.0);
        let mut config = OptimizationConfig::new(0.06, 0.0);
        config.max_iters = 0;
        let inner = ClosedCurve::circle(Circle::new(CENTER, 0.45), 128).unwrap();
        let out = optimize(&samples, &sigma, &config, &inner).unwrap();
        assert_eq!(out.history.records.len(), 1);
        assert_eq!(out.stop, StopReason::MaxIterations);
        assert!(hausdorff_distance(&out.gamma_p, &inner) < 1e-12);
    }

    #[test]
    fn optimize_recovers_annulus_radius() {
        let r1_true = 0.5;
        let samples = annulus_samples(r1_true, 2.0, 128);
        let sigma = Conductivity::constant(1.0);
        let mut config = OptimizationConfig::new(0.05, 0.0);
        config.max_iters = 120;
        let inner = ClosedCurve::circle(Circle::new(CENTER, 0.44), 128).unwrap();
        let out = optimize(&samples, &sigma, &config, &inner).unwrap();
        // strictly decreasing recorded J
        for w in out.history.records.windows(2) {
            assert!(w[1].j < w[0].j, "J not strictly decreasing");
        }
        let mean_r = out.gamma_p.mean_radius(CENTER);
        let rel = (mean_r - r1_true).abs() / r1_true;
        println!(
            "recovered radius {mean_r:.5} after {} iters (stop {:?}), J {:.3e} → {:.3e}",
            out.history.records.len() - 1,
            out.stop,
            out.history.records[0].j,
            out.j
        );
        assert!(rel <= 0.02, "radius {mean_r} vs {r1_true} (rel {rel})");
        // identity gap small on every iteration
        for r in &out.history.records[1..] {
            assert!(
                r.descent_identity_gap <= 1e-9,
                "identity gap {} at iter {}",
                r.descent_identity_gap,
                r.iter
            );
        }
    }

    #[test]
    fn gradient_flow_direction_matches_radius_error() {
        let samples = annulus_samples(0.5, 2.0, 64);
        let sigma = Conductivity::constant(1.0);
        let mut config = OptimizationConfig::new(0.05, 0.0);
        config.max_iters = 5;
        for (start, expect_growth) in [(0.42, true), (0.58, false)] {
            let inner = ClosedCurve::circle(Circle::new(CENTER, start), 128).unwrap();
            let out = optimize(&samples, &sigma, &config, &inner).unwrap();
            let r = out.gamma_p.mean_radius(CENTER);
            if expect_growth {
                assert!(r > start, "radius should grow from {start}, got {r}");
            } else {
                assert!(r < start, "radius should shrink from {start}, got {r}");
            }
        }
    }

    #[test]
    fn optimize_translation_equivariance() {
        let shift = Point::new(-0.8, 0.6);
        let sigma = Conductivity::constant(1.0);
        let mut config = OptimizationConfig::new(0.06, 0.0);
        config.max_iters = 25;
        let samples_a = annulus_samples(0.5, 2.0, 64);
        let theta = samples_a.theta().to_vec();
        let samples_b = BoundarySamples::new(
            theta,
            samples_a.u0().to_vec(),
            samples_a.u1().to_vec(),
            CENTER.add(shift),
            R_OUTER,
        )
        .unwrap();
        let inner_a = ClosedCurve::circle(Circle::new(CENTER, 0.45), 128).unwrap();
        let inner_b = inner_a.translated(shift);
        let out_a = optimize(&samples_a, &sigma, &config, &inner_a).unwrap();
        let out_b = optimize(&samples_b, &sigma, &config, &inner_b).unwrap();
        let moved = out_a.gamma_p.translated(shift);
        let d = hausdorff_distance(&moved, &out_b.gamma_p);
        assert!(d <= config.mesh_h, "equivariance gap {d}");
    }

    #[test]
    fn compute_b_cases() {
        let inner = ClosedCurve::circle(Circle::new(CENTER, 0.5), 128).unwrap();
        let mesh = generate_mesh(wall(), &inner, 0.02).unwrap();
        let constant = ScalarField::new(&mesh, vec![4.0; mesh.n_nodes()]).unwrap();
        for (br, bz) in compute_b(&mesh, &constant).unwrap() {
            assert!(br.abs() < 1e-12 && bz.abs() < 1e-12);
        }
        // u = r² ⇒ B_r = 0, B_z = 2
        let quad = ScalarField::new(&mesh, mesh.nodes.iter().map(|p| p.x * p.x).collect())
            .unwrap();
        for (t, (br, bz)) in compute_b(&mesh, &quad).unwrap().into_iter().enumerate() {
            assert!(br.abs() < 0.05 * 2.0, "B_r {br} at {t}");
            assert!((bz - 2.0).abs() < 0.05 * 2.0, "B_z {bz} at {t}");
        }
        // u = r²z ⇒ B_r = −r, B_z = 2z
        let mixed = ScalarField::new(
            &mesh,
            mesh.nodes.iter().map(|p| p.x * p.x * p.y).collect(),
        )
        .unwrap();
        for (t, (br, bz)) in compute_b(&mesh, &mixed).unwrap().into_iter().enumerate() {
            let c = mesh.triangle_centroid(t);
            assert!((br + c.x).abs() < 0.05 * c.x, "B_r {br} vs {}", -c.x);
            assert!((bz - 2.0 * c.y).abs() < 0.06 * 2.42, "B_z {bz} vs {}", 2.0 * c.y);
        }
    }
}
