//! Synthetic measurement generation: pick a ground-truth inner boundary,
//! solve the forward double-Dirichlet problem, read the wall flux back as
//! u₁ and sample both traces at uniform wall angles, optionally with seeded
//! Gaussian noise. Stands in for magnetic sensor data.

use std::f64::consts::TAU;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::boundary_data::{BoundarySamples, Conductivity};
use crate::error::OptError;
use crate::fem::{nodal_flux_density, solve_dirichlet_nodal, ScalarField};
use crate::geometry::{wrap_angle, Circle, ClosedCurve, Point};
use crate::mesh::{generate_mesh, LoopTag, Mesh};

/// Wall Dirichlet datum of the forward model, evaluated in coordinates
/// centered on the wall axis.
#[derive(Debug, Clone, Copy)]
pub enum WallData {
    Constant(f64),
    /// cxx·x² + cyy·y² + cx·x + cy·y + c0 with (x, y) relative to the wall
    /// center
    Quadratic {
        cxx: f64,
        cyy: f64,
        cx: f64,
        cy: f64,
        c0: f64,
    },
}

impl WallData {
    pub fn eval(&self, rel: Point) -> f64 {
        match self {
            WallData::Constant(v) => *v,
            WallData::Quadratic {
                cxx,
                cyy,
                cx,
                cy,
                c0,
            } => cxx * rel.x * rel.x + cyy * rel.y * rel.y + cx * rel.x + cy * rel.y + c0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub wall: Circle,
    pub truth: ClosedCurve,
    pub u0: WallData,
    /// flux level on the truth boundary
    pub c: f64,
    pub mesh_h: f64,
    pub n_samples: usize,
    /// relative noise amplitude (fraction of each column's RMS)
    pub noise_rel: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub samples: BoundarySamples,
    pub truth: ClosedCurve,
    pub c: f64,
    pub mesh: Mesh,
    /// the forward solution the samples were read from
    pub state: ScalarField,
}

/// Deterministic Gaussian via Box-Muller on the seeded generator.
fn gaussian(rng: &mut StdRng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

pub fn synthesize(sigma: &Conductivity, cfg: &SynthConfig) -> Result<SynthOutput, OptError> {
    let mesh = generate_mesh(cfg.wall, &cfg.truth, cfg.mesh_h)?;
    let center = cfg.wall.center;
    let u = solve_dirichlet_nodal(
        &mesh,
        sigma,
        &|i| cfg.u0.eval(mesh.nodes[i].sub(center)),
        cfg.c,
    )?;
    // wall flux density σ∂u/∂n, converted to ∂u/∂n and interpolated in angle
    let density = nodal_flux_density(&mesh, sigma, &u, LoopTag::GammaE)?;
    let mut by_angle: Vec<(f64, f64)> = density
        .iter()
        .map(|(i, d)| (wrap_angle(mesh.node_angle(*i)), d / sigma.eval(mesh.nodes[*i])))
        .collect();
    by_angle.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let u1_at = |theta: f64| -> f64 {
        let t = wrap_angle(theta);
        let n = by_angle.len();
        let idx = by_angle.partition_point(|(a, _)| *a <= t);
        let (t0, v0) = by_angle[(idx + n - 1) % n];
        let (t1, v1) = by_angle[idx % n];
        let span = wrap_angle(t1 - t0);
        if span == 0.0 {
            return v0;
        }
        let frac = wrap_angle(t - t0) / span;
        v0 + (v1 - v0) * frac
    };

    let theta: Vec<f64> = (0..cfg.n_samples)
        .map(|k| TAU * k as f64 / cfg.n_samples as f64)
        .collect();
    let mut u0_col: Vec<f64> = theta
        .iter()
        .map(|t| cfg.u0.eval(cfg.wall.at(*t).sub(center)))
        .collect();
    let mut u1_col: Vec<f64> = theta.iter().map(|t| u1_at(*t)).collect();

    if cfg.noise_rel > 0.0 {
        let mut rng = StdRng::seed_from_u64(cfg.seed);
        let rms = |col: &[f64]| {
            (col.iter().map(|v| v * v).sum::<f64>() / col.len() as f64)
                .sqrt()
                .max(1e-300)
        };
        let s0 = cfg.noise_rel * rms(&u0_col);
        let s1 = cfg.noise_rel * rms(&u1_col);
        for v in u0_col.iter_mut() {
            *v += s0 * gaussian(&mut rng);
        }
        for v in u1_col.iter_mut() {
            *v += s1 * gaussian(&mut rng);
        }
    }

    let samples = BoundarySamples::new(theta, u0_col, u1_col, center, cfg.wall.radius)?;
    Ok(SynthOutput {
        samples,
        truth: cfg.truth.clone(),
        c: cfg.c,
        mesh,
        state: u,
    })
}
