//! Orthogonal projection onto truncated series traces and the bounded
//! extremal problem: minimize the L²(I) misfit to the data subject to
//! ‖Re g − φ‖_{L²(J)} ≤ M, with the Lagrange parameter found by bisection
//! on the monotone saturation map.
//!
//! Data-side inner products are discrete (trapezoid weights on the sample
//! angles), so an exact series datum is reproduced to solver precision;
//! basis-only integrals on J use the composite Gauss-Legendre panels of the
//! partition.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::boundary_data::{BoundaryTag, ComplexTrace};
use crate::error::BepError;
use crate::geometry::wrap_angle;

use super::partition::{BoundaryArc, BoundaryPartition, QuadArc};
use super::{basis_trace, AnnulusGeometry, LaurentModel};

/// Solver knobs; the defaults implement the documented contract.
#[derive(Debug, Clone)]
pub struct BepConfig {
    pub degree: usize,
    /// known circulation coefficient b₀; its trace is subtracted from the
    /// data on I and from φ on J, and attached to the returned model
    pub log_coeff: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// relative tolerance on |constraint − M|
    pub lambda_tol: f64,
    pub max_bisections: usize,
}

impl BepConfig {
    pub fn new(degree: usize) -> Self {
        Self {
            degree,
            log_coeff: 0.0,
            lambda_min: 1e-12,
            lambda_max: 1e12,
            lambda_tol: 1e-8,
            max_bisections: 200,
        }
    }

    pub fn with_log_coeff(mut self, b0: f64) -> Self {
        self.log_coeff = b0;
        self
    }
}

/// Solution of the bounded extremal problem.
///
/// `lambda == -1.0` marks the case where the unconstrained projection
/// already satisfies the bound; `lambda > 0` implies the constraint is
/// saturated up to the solver tolerance.
#[derive(Debug, Clone)]
pub struct BepSolution {
    pub model: LaurentModel,
    pub lambda: f64,
    pub error_i: f64,
    pub constraint_j: f64,
}

/// Real coefficient layout: x[2j] = Re a_n, x[2j+1] = Im a_n with
/// n = j − N, so Re-part constraints become linear maps on x.
#[derive(Debug, Clone, Copy)]
struct RealBasis<'g> {
    geometry: &'g AnnulusGeometry,
    degree: usize,
}

impl<'g> RealBasis<'g> {
    fn dim(&self) -> usize {
        2 * (2 * self.degree + 1)
    }

    fn complex_value(&self, k: usize, tag: BoundaryTag, theta: f64) -> Complex64 {
        let j = k / 2;
        let n = j as i64 - self.degree as i64;
        let phi = basis_trace(n, false, self.geometry, tag, theta);
        if k % 2 == 0 {
            phi
        } else {
            Complex64::i() * phi
        }
    }

    fn model_from_coeffs(&self, x: &DVector<f64>, log_coeff: f64) -> LaurentModel {
        let m = 2 * self.degree + 1;
        let coeffs = (0..m)
            .map(|j| Complex64::new(x[2 * j], x[2 * j + 1]))
            .collect();
        LaurentModel {
            geometry: *self.geometry,
            degree: self.degree,
            coeffs,
            log_coeff,
        }
    }
}

/// One weighted data sample on the boundary.
#[derive(Debug, Clone, Copy)]
struct WeightedSample {
    tag: BoundaryTag,
    theta: f64,
    value: Complex64,
    weight: f64,
}

/// Trapezoid weights (dθ/2π) for samples restricted to `arcs`. Samples on a
/// full-circle arc get cyclic weights; otherwise open-chain weights.
fn weighted_samples_on(trace: &ComplexTrace, arcs: &[BoundaryArc]) -> Vec<WeightedSample> {
    use std::f64::consts::TAU;
    let mut out = Vec::new();
    for arc in arcs {
        // gather samples of matching tag inside the arc, in arc-relative order
        let mut chain: Vec<(f64, f64, Complex64)> = Vec::new(); // (s, theta, value)
        for trace_arc in &trace.arcs {
            if trace_arc.tag != arc.tag {
                continue;
            }
            for (t, v) in trace_arc.theta.iter().zip(&trace_arc.values) {
                if arc.contains_angle(*t) {
                    chain.push((wrap_angle(t - arc.start), *t, *v));
                }
            }
        }
        if chain.len() < 2 {
            continue;
        }
        chain.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let n = chain.len();
        let closed = arc.length() >= TAU - 1e-12;
        for i in 0..n {
            let w = if closed {
                let prev = chain[(i + n - 1) % n].0;
                let next = chain[(i + 1) % n].0;
                let forward = wrap_angle(next - chain[i].0);
                let backward = wrap_angle(chain[i].0 - prev);
                (forward + backward) / 2.0
            } else if i == 0 {
                (chain[1].0 - chain[0].0) / 2.0
            } else if i == n - 1 {
                (chain[n - 1].0 - chain[n - 2].0) / 2.0
            } else {
                (chain[i + 1].0 - chain[i - 1].0) / 2.0
            };
            out.push(WeightedSample {
                tag: arc.tag,
                theta: chain[i].1,
                value: chain[i].2,
                weight: w / TAU,
            });
        }
    }
    out
}

/// Pre-assembled discrete problem: normal-equation blocks for the solves
/// plus design matrices for cancellation-free residual norms.
struct BepWorkspace<'g> {
    basis: RealBasis<'g>,
    /// data block: A_I = Dᴴ W D realified, b_I = Re(Dᴴ W f̃)
    a_i: DMatrix<f64>,
    b_i: DVector<f64>,
    design_i: DMatrix<Complex64>,
    ftilde: DVector<Complex64>,
    weights_i: Vec<f64>,
    /// constraint block on the Gauss-Legendre nodes of J
    a_j: DMatrix<f64>,
    b_j: DVector<f64>,
    design_j: DMatrix<f64>,
    phitilde: DVector<f64>,
    weights_j: Vec<f64>,
}

impl<'g> BepWorkspace<'g> {
    fn build(
        basis: RealBasis<'g>,
        samples: &[WeightedSample],
        quads: &[QuadArc],
        phi: &dyn Fn(BoundaryTag, f64) -> f64,
        log_coeff: f64,
    ) -> Self {
        let d = basis.dim();
        // data side
        let m = samples.len();
        let mut design_i = DMatrix::<Complex64>::zeros(m, d);
        let mut ftilde = DVector::<Complex64>::zeros(m);
        let mut weights_i = Vec::with_capacity(m);
        for (i, s) in samples.iter().enumerate() {
            for k in 0..d {
                design_i[(i, k)] = basis.complex_value(k, s.tag, s.theta);
            }
            // stored traces are single-valued: only the real log part remains
            let log_re = basis_trace(0, true, basis.geometry, s.tag, s.theta).re;
            ftilde[i] = s.value - Complex64::new(log_coeff * log_re, 0.0);
            weights_i.push(s.weight);
        }
        let mut a_i = DMatrix::<f64>::zeros(d, d);
        let mut b_i = DVector::<f64>::zeros(d);
        for i in 0..m {
            let w = weights_i[i];
            for k in 0..d {
                let ck = design_i[(i, k)];
                b_i[k] += w * (ftilde[i] * ck.conj()).re;
                for l in k..d {
                    let v = w * (ck * design_i[(i, l)].conj()).re;
                    a_i[(k, l)] += v;
                    if l != k {
                        a_i[(l, k)] += v;
                    }
                }
            }
        }
        // constraint side
        let nj: usize = quads.iter().map(|q| q.nodes.len()).sum();
        let mut design_j = DMatrix::<f64>::zeros(nj, d);
        let mut phitilde = DVector::<f64>::zeros(nj);
        let mut weights_j = Vec::with_capacity(nj);
        let mut row = 0;
        for quad in quads {
            for (t, w) in quad.nodes.iter().zip(&quad.weights) {
                for k in 0..d {
                    design_j[(row, k)] = basis.complex_value(k, quad.tag, *t).re;
                }
                phitilde[row] = phi(quad.tag, *t)
                    - log_coeff * basis_trace(0, true, basis.geometry, quad.tag, *t).re;
                weights_j.push(*w);
                row += 1;
            }
        }
        let mut a_j = DMatrix::<f64>::zeros(d, d);
        let mut b_j = DVector::<f64>::zeros(d);
        for i in 0..nj {
            let w = weights_j[i];
            for k in 0..d {
                let rk = design_j[(i, k)];
                b_j[k] += w * phitilde[i] * rk;
                for l in k..d {
                    let v = w * rk * design_j[(i, l)];
                    a_j[(k, l)] += v;
                    if l != k {
                        a_j[(l, k)] += v;
                    }
                }
            }
        }
        Self {
            basis,
            a_i,
            b_i,
            design_i,
            ftilde,
            weights_i,
            a_j,
            b_j,
            design_j,
            phitilde,
            weights_j,
        }
    }

    fn solve_at(&self, lambda: f64) -> Result<DVector<f64>, BepError> {
        let a = &self.a_i + &self.a_j * lambda;
        let rhs = &self.b_i + &self.b_j * lambda;
        solve_spd(&a, &rhs, self.basis.degree)
    }

    fn solve_unconstrained(&self) -> Result<DVector<f64>, BepError> {
        solve_spd(&self.a_i, &self.b_i, self.basis.degree)
    }

    /// ‖F̃ − g‖ on the data samples, computed pointwise.
    fn misfit(&self, x: &DVector<f64>) -> f64 {
        let g = &self.design_i * x.map(|v| Complex64::new(v, 0.0));
        let mut acc = 0.0;
        for i in 0..self.weights_i.len() {
            acc += self.weights_i[i] * (self.ftilde[i] - g[i]).norm_sqr();
        }
        acc.sqrt()
    }

    /// ‖Re g − φ̃‖ on the J quadrature nodes, computed pointwise.
    fn constraint(&self, x: &DVector<f64>) -> f64 {
        let g = &self.design_j * x;
        let mut acc = 0.0;
        for i in 0..self.weights_j.len() {
            let r = g[i] - self.phitilde[i];
            acc += self.weights_j[i] * r * r;
        }
        acc.sqrt()
    }
}

fn solve_spd(
    a: &DMatrix<f64>,
    rhs: &DVector<f64>,
    degree: usize,
) -> Result<DVector<f64>, BepError> {
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok(chol.solve(rhs));
    }
    // semidefinite fall-back: tiny Tikhonov shift keeps the system solvable
    let scale = a.diagonal().amax().max(1e-300);
    let shifted = a + DMatrix::identity(a.nrows(), a.ncols()) * (1e-14 * scale);
    Cholesky::new(shifted)
        .map(|c| c.solve(rhs))
        .ok_or(BepError::GramSingular { degree })
}

/// Bounded extremal problem on the partition: data on I (discrete samples
/// from `trace`), real-part reference φ on J, bound `m`.
pub fn solve_bep(
    partition: &BoundaryPartition,
    trace: &ComplexTrace,
    phi: &dyn Fn(BoundaryTag, f64) -> f64,
    m: f64,
    config: &BepConfig,
) -> Result<BepSolution, BepError> {
    let basis = RealBasis {
        geometry: &partition.geometry,
        degree: config.degree,
    };
    let samples = weighted_samples_on(trace, &partition.arcs_i);
    if samples.len() * 2 < basis.dim() {
        return Err(BepError::GramSingular {
            degree: config.degree,
        });
    }
    let ws = BepWorkspace::build(basis, &samples, &partition.quad_j, phi, config.log_coeff);
    solve_on_workspace(&ws, m, config)
}

fn solve_on_workspace(
    ws: &BepWorkspace,
    m: f64,
    config: &BepConfig,
) -> Result<BepSolution, BepError> {
    // unconstrained projection first; λ = −1 when it already satisfies the bound
    let x_unc = ws.solve_unconstrained()?;
    let unc_constraint = ws.constraint(&x_unc);
    if unc_constraint <= m {
        return Ok(BepSolution {
            model: ws.basis.model_from_coeffs(&x_unc, config.log_coeff),
            lambda: -1.0,
            error_i: ws.misfit(&x_unc),
            constraint_j: unc_constraint,
        });
    }

    // saturation: find λ > 0 with constraint(λ) = m; the map is decreasing
    let mut lo = config.lambda_min;
    let mut hi = config.lambda_max;
    let c_hi = ws.constraint(&ws.solve_at(hi)?);
    if c_hi > m {
        return Err(BepError::ConstraintUnreachable {
            bound: m,
            floor: c_hi,
        });
    }
    let mut best_x = x_unc;
    let mut best_gap = f64::INFINITY;
    let mut best_lambda = lo;
    for _ in 0..config.max_bisections {
        let lambda = ((lo.ln() + hi.ln()) / 2.0).exp();
        let x = ws.solve_at(lambda)?;
        let c = ws.constraint(&x);
        let gap = (c - m).abs();
        if gap < best_gap {
            best_gap = gap;
            best_x = x;
            best_lambda = lambda;
        }
        if c > m {
            lo = lambda;
        } else {
            hi = lambda;
        }
        if gap <= config.lambda_tol * m && hi / lo < 1.0 + 1e-15 {
            break;
        }
    }
    Ok(BepSolution {
        model: ws.basis.model_from_coeffs(&best_x, config.log_coeff),
        lambda: best_lambda,
        error_i: ws.misfit(&best_x),
        constraint_j: ws.constraint(&best_x),
    })
}

/// Least-squares projection of a full-boundary trace onto the truncated
/// monomial trace space (normal equations in the discrete data norm).
///
/// Idempotent: projecting the trace of the result reproduces the
/// coefficients to solver precision.
pub fn project_hardy(
    trace: &ComplexTrace,
    geometry: &AnnulusGeometry,
    degree: usize,
) -> Result<LaurentModel, BepError> {
    let has_outer = trace.arcs.iter().any(|a| a.tag == BoundaryTag::Outer);
    let has_inner = trace.arcs.iter().any(|a| a.tag == BoundaryTag::Inner);
    if !has_outer || !has_inner {
        return Err(BepError::IncompleteTrace);
    }
    let arcs = [
        BoundaryArc::full_circle(BoundaryTag::Outer),
        BoundaryArc::full_circle(BoundaryTag::Inner),
    ];
    let samples = weighted_samples_on(trace, &arcs);
    let m = 2 * degree + 1;
    if samples.len() < m {
        return Err(BepError::GramSingular { degree });
    }
    // complex normal equations G a = rhs with G[k,l] = ⟨φ_l, φ_k⟩
    let mut g = DMatrix::<Complex64>::zeros(m, m);
    let mut rhs = DVector::<Complex64>::zeros(m);
    let mut phi = vec![Complex64::ZERO; m];
    for s in &samples {
        for (j, slot) in phi.iter_mut().enumerate() {
            let n = j as i64 - degree as i64;
            *slot = basis_trace(n, false, geometry, s.tag, s.theta);
        }
        for k in 0..m {
            rhs[k] += s.weight * s.value * phi[k].conj();
            for l in 0..m {
                g[(k, l)] += s.weight * phi[l] * phi[k].conj();
            }
        }
    }
    let coeffs = Cholesky::new(g)
        .ok_or(BepError::GramSingular { degree })?
        .solve(&rhs);
    LaurentModel::new(*geometry, degree, coeffs.as_slice().to_vec(), 0.0)
}

/// Gram matrices of the trace basis over the partition, Gauss-Legendre
/// quadrature. `g_i` is the complex Gram on I (monomials, then the log
/// element when `with_log`); `g_j_real` is the Gram of the real parts on J
/// over the interleaved real/imaginary coefficient components.
#[derive(Debug, Clone)]
pub struct GramOperators {
    pub geometry: AnnulusGeometry,
    pub degree: usize,
    pub with_log: bool,
    pub g_i: DMatrix<Complex64>,
    pub g_j_real: DMatrix<f64>,
}

impl GramOperators {
    fn complex_dim(&self) -> usize {
        2 * self.degree + 1 + usize::from(self.with_log)
    }

    /// ⟨f, basis_k⟩_{L²(I)} for a caller-supplied trace function.
    pub fn rhs_i(
        &self,
        partition: &BoundaryPartition,
        f: &dyn Fn(BoundaryTag, f64) -> Complex64,
    ) -> DVector<Complex64> {
        let m = self.complex_dim();
        let mut rhs = DVector::zeros(m);
        for quad in &partition.quad_i {
            for (t, w) in quad.nodes.iter().zip(&quad.weights) {
                let fv = f(quad.tag, *t);
                for k in 0..m {
                    let phi = self.basis_k(k, quad.tag, *t);
                    rhs[k] += *w * fv * phi.conj();
                }
            }
        }
        rhs
    }

    /// ⟨φ, Re basis-component⟩_{L²(J)} over real coefficient components.
    pub fn rhs_j(
        &self,
        partition: &BoundaryPartition,
        phi: &dyn Fn(BoundaryTag, f64) -> f64,
    ) -> DVector<f64> {
        let d = self.real_dim();
        let mut rhs = DVector::zeros(d);
        for quad in &partition.quad_j {
            for (t, w) in quad.nodes.iter().zip(&quad.weights) {
                let target = phi(quad.tag, *t);
                for k in 0..d {
                    rhs[k] += *w * target * self.real_component(k, quad.tag, *t);
                }
            }
        }
        rhs
    }

    fn real_dim(&self) -> usize {
        2 * (2 * self.degree + 1) + usize::from(self.with_log)
    }

    fn basis_k(&self, k: usize, tag: BoundaryTag, theta: f64) -> Complex64 {
        let monomials = 2 * self.degree + 1;
        if k < monomials {
            basis_trace(k as i64 - self.degree as i64, false, &self.geometry, tag, theta)
        } else {
            basis_trace(0, true, &self.geometry, tag, theta)
        }
    }

    fn real_component(&self, k: usize, tag: BoundaryTag, theta: f64) -> f64 {
        let interleaved = 2 * (2 * self.degree + 1);
        if k < interleaved {
            let n = (k / 2) as i64 - self.degree as i64;
            let phi = basis_trace(n, false, &self.geometry, tag, theta);
            if k % 2 == 0 {
                phi.re
            } else {
                (Complex64::i() * phi).re
            }
        } else {
            basis_trace(0, true, &self.geometry, tag, theta).re
        }
    }
}

/// Assembles both Gram operators for the partition at the given degree.
pub fn gram_operators(
    partition: &BoundaryPartition,
    degree: usize,
    with_log: bool,
) -> Result<GramOperators, BepError> {
    let mut ops = GramOperators {
        geometry: partition.geometry,
        degree,
        with_log,
        g_i: DMatrix::zeros(0, 0),
        g_j_real: DMatrix::zeros(0, 0),
    };
    let m = ops.complex_dim();
    let mut g_i = DMatrix::<Complex64>::zeros(m, m);
    let mut any_weight = false;
    for quad in &partition.quad_i {
        for (t, w) in quad.nodes.iter().zip(&quad.weights) {
            if *w != 0.0 {
                any_weight = true;
            }
            for k in 0..m {
                let pk = ops.basis_k(k, quad.tag, *t);
                for l in 0..m {
                    let pl = ops.basis_k(l, quad.tag, *t);
                    g_i[(k, l)] += *w * pl * pk.conj();
                }
            }
        }
    }
    if !partition.quad_i.is_empty() && !any_weight {
        return Err(BepError::DegenerateQuadrature);
    }
    let d = ops.real_dim();
    let mut g_j = DMatrix::<f64>::zeros(d, d);
    for quad in &partition.quad_j {
        for (t, w) in quad.nodes.iter().zip(&quad.weights) {
            for k in 0..d {
                let rk = ops.real_component(k, quad.tag, *t);
                for l in k..d {
                    let v = *w * rk * ops.real_component(l, quad.tag, *t);
                    g_j[(k, l)] += v;
                    if l != k {
                        g_j[(l, k)] += v;
                    }
                }
            }
        }
    }
    ops.g_i = g_i;
    ops.g_j_real = g_j;
    Ok(ops)
}

/// Result of the bound cross-validation.
#[derive(Debug, Clone)]
pub struct CrossValidation {
    pub m2: f64,
    pub solution: BepSolution,
    /// misfit of the returned solution on the validation arcs
    pub validation_misfit: f64,
    /// the validation curve was flat over the whole bracket; the smallest
    /// bracketed bound was returned
    pub flat_curve: bool,
}

/// Chooses the bound by minimizing the misfit on the validation arcs I₂ of
/// the solution trained on I₁ (golden section on log M), then re-solves
/// with the winner.
pub fn cross_validate(
    geometry: AnnulusGeometry,
    trace: &ComplexTrace,
    i1: &[BoundaryArc],
    i2: &[BoundaryArc],
    phi: &dyn Fn(BoundaryTag, f64) -> f64,
    config: &BepConfig,
    max_panel: f64,
) -> Result<CrossValidation, BepError> {
    let partition = BoundaryPartition::complement(geometry, i1.to_vec(), max_panel)?;
    let validation = weighted_samples_on(trace, i2);
    if validation.is_empty() {
        return Err(BepError::EmptyArc {
            a: f64::NAN,
            b: f64::NAN,
        });
    }

    let misfit_on_i2 = |model: &LaurentModel| -> f64 {
        let mut acc = 0.0;
        for s in &validation {
            let g = model.single_valued_trace_at(s.tag, s.theta);
            acc += s.weight * (s.value - g).norm_sqr();
        }
        acc.sqrt()
    };

    // scale from the unconstrained saturation level
    let basis = RealBasis {
        geometry: &partition.geometry,
        degree: config.degree,
    };
    let train = weighted_samples_on(trace, &partition.arcs_i);
    if train.len() * 2 < basis.dim() {
        return Err(BepError::GramSingular {
            degree: config.degree,
        });
    }
    let ws = BepWorkspace::build(basis, &train, &partition.quad_j, phi, config.log_coeff);
    let x_unc = ws.solve_unconstrained()?;
    let unc_level = ws.constraint(&x_unc);
    let phi_norm = ws.constraint(&DVector::zeros(ws.basis.dim()));
    let scale = unc_level.max(phi_norm).max(1e-9);

    // bounds below the achievable floor are evaluated at the most
    // constrained model instead of failing the search
    let solve_clamped = |m: f64| -> Result<BepSolution, BepError> {
        match solve_on_workspace(&ws, m, config) {
            Err(BepError::ConstraintUnreachable { .. }) => {
                let x = ws.solve_at(config.lambda_max)?;
                Ok(BepSolution {
                    model: ws.basis.model_from_coeffs(&x, config.log_coeff),
                    lambda: config.lambda_max,
                    error_i: ws.misfit(&x),
                    constraint_j: ws.constraint(&x),
                })
            }
            other => other,
        }
    };

    // every evaluation is remembered; the returned bound is the smallest M
    // within tolerance of the best validation misfit seen
    let mut evaluations: Vec<(f64, f64)> = Vec::new();
    let mut objective = |m: f64| -> Result<f64, BepError> {
        let sol = solve_clamped(m)?;
        let val = misfit_on_i2(&sol.model);
        evaluations.push((m, val));
        Ok(val)
    };

    let (mut a, mut b) = ((1e-6 * scale).ln(), (1e6 * scale).ln());
    // flatness probe across the bracket
    let probes = [a, 0.75 * a + 0.25 * b, 0.5 * (a + b), 0.25 * a + 0.75 * b, b];
    let mut pvals = Vec::with_capacity(probes.len());
    for t in probes {
        pvals.push(objective(t.exp())?);
    }
    let pmax = pvals.iter().cloned().fold(f64::MIN, f64::max);
    let pmin = pvals.iter().cloned().fold(f64::MAX, f64::min);
    let flat = pmax - pmin <= 1e-12 * pmax.max(1e-300);
    if flat {
        let m2 = a.exp();
        let solution = solve_clamped(m2)?;
        let validation_misfit = misfit_on_i2(&solution.model);
        return Ok(CrossValidation {
            m2,
            solution,
            validation_misfit,
            flat_curve: true,
        });
    }

    // golden section on ln M, tolerance 1e-4 relative in M
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = objective(c.exp())?;
    let mut fd = objective(d.exp())?;
    while (b - a).abs() > 1e-4 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d.exp())?;
        }
    }
    objective((0.5 * (a + b)).exp())?;
    let min_val = evaluations
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    let range = pmax - pmin;
    let threshold = min_val + 1e-9 * min_val.abs() + 1e-9 * range.max(0.0);
    let m2 = evaluations
        .iter()
        .filter(|(_, v)| *v <= threshold)
        .map(|(m, _)| *m)
        .fold(f64::INFINITY, f64::min);
    let solution = solve_clamped(m2)?;
    let validation_misfit = misfit_on_i2(&solution.model);
    Ok(CrossValidation {
        m2,
        solution,
        validation_misfit,
        flat_curve: false,
    })
}
