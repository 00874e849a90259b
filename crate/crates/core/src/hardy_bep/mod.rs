//! Series approximation on the annulus (harmonic case) and the bounded
//! extremal problem: truncated Laurent trace basis plus one real
//! log/circulation element, orthogonal projection onto the trace space,
//! constrained best approximation with saturated bound, cross-validation of
//! the bound, interior evaluation, and the first-order transform residual
//! that diagnoses conjugate pairs for non-constant σ.

mod bep;
mod partition;

use num_complex::Complex64;

use crate::boundary_data::{BoundaryTag, Conductivity};
use crate::error::BepError;
use crate::geometry::{wrap_angle, Point};

pub use bep::{
    cross_validate, gram_operators, project_hardy, solve_bep, BepConfig, BepSolution,
    CrossValidation, GramOperators,
};
pub use partition::{quadrature_for_arc, BoundaryArc, BoundaryPartition, QuadArc, DEFAULT_MAX_PANEL};

/// The annular domain between the inner circle (limiter-conformal) and the
/// outer wall, both centered at the same point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusGeometry {
    pub center: Point,
    pub rho_inner: f64,
    pub rho_outer: f64,
}

impl AnnulusGeometry {
    pub fn new(center: Point, rho_inner: f64, rho_outer: f64) -> Result<Self, BepError> {
        if !(rho_inner > 0.0 && rho_inner < rho_outer) {
            return Err(BepError::BadRadii {
                inner: rho_inner,
                outer: rho_outer,
            });
        }
        Ok(Self {
            center,
            rho_inner,
            rho_outer,
        })
    }

    pub fn radius_of(&self, tag: BoundaryTag) -> f64 {
        match tag {
            BoundaryTag::Outer => self.rho_outer,
            BoundaryTag::Inner => self.rho_inner,
        }
    }
}

/// Trace of the basis element on the circle `tag` at angle `theta`.
///
/// Monomial n: ((ρ e^{iθ})/ρ_outer)^n. Log element: ln(ρ/ρ_outer) + iθ with
/// the branch cut at θ = 0, matching the single-valued split used when the
/// Cauchy trace is built.
pub fn basis_trace(
    n: i64,
    log_element: bool,
    geometry: &AnnulusGeometry,
    tag: BoundaryTag,
    theta: f64,
) -> Complex64 {
    let ratio = geometry.radius_of(tag) / geometry.rho_outer;
    if log_element {
        Complex64::new(ratio.ln(), wrap_angle(theta))
    } else {
        let modulus = ratio.powi(n as i32);
        Complex64::from_polar(modulus, n as f64 * theta)
    }
}

/// Truncated Laurent model f(z) = b₀ Log((z−c)/ρ_e) + Σ aₙ ((z−c)/ρ_e)ⁿ.
///
/// The real part is single-valued; the imaginary part is multivalued iff
/// b₀ ≠ 0.
#[derive(Debug, Clone)]
pub struct LaurentModel {
    pub geometry: AnnulusGeometry,
    pub degree: usize,
    /// aₙ for n = −N..N, index i ↔ n = i − N
    pub coeffs: Vec<Complex64>,
    /// b₀, the circulation divided by 2π
    pub log_coeff: f64,
}

impl LaurentModel {
    pub fn zero(geometry: AnnulusGeometry, degree: usize) -> Self {
        Self {
            geometry,
            degree,
            coeffs: vec![Complex64::ZERO; 2 * degree + 1],
            log_coeff: 0.0,
        }
    }

    pub fn new(
        geometry: AnnulusGeometry,
        degree: usize,
        coeffs: Vec<Complex64>,
        log_coeff: f64,
    ) -> Result<Self, BepError> {
        if coeffs.len() != 2 * degree + 1 {
            return Err(BepError::GramSingular { degree });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) || !log_coeff.is_finite()
        {
            return Err(BepError::GramSingular { degree });
        }
        Ok(Self {
            geometry,
            degree,
            coeffs,
            log_coeff,
        })
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        let idx = n + self.degree as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::ZERO
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// Boundary value at angle θ on circle `tag`, with the single-valued
    /// branch convention of [`basis_trace`].
    pub fn trace_at(&self, tag: BoundaryTag, theta: f64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (i, a) in self.coeffs.iter().enumerate() {
            let n = i as i64 - self.degree as i64;
            acc += a * basis_trace(n, false, &self.geometry, tag, theta);
        }
        if self.log_coeff != 0.0 {
            acc += self.log_coeff * basis_trace(0, true, &self.geometry, tag, theta);
        }
        acc
    }

    /// f and ∇(Re f) at an interior point, both from the series.
    ///
    /// Im f uses the principal branch of the logarithm when b₀ ≠ 0.
    pub fn evaluate_interior(&self, p: Point) -> Result<(Complex64, Point), BepError> {
        let w = Complex64::new(p.x - self.geometry.center.x, p.y - self.geometry.center.y)
            / self.geometry.rho_outer;
        let rho = w.norm() * self.geometry.rho_outer;
        if rho <= self.geometry.rho_inner || rho >= self.geometry.rho_outer {
            return Err(BepError::PointOutsideAnnulus { x: p.x, y: p.y });
        }
        let mut f = Complex64::ZERO;
        let mut df = Complex64::ZERO; // f'(z)
        for (i, a) in self.coeffs.iter().enumerate() {
            let n = i as i64 - self.degree as i64;
            let wn = w.powi(n as i32);
            f += a * wn;
            if n != 0 {
                df += a * (n as f64) * wn / (w * self.geometry.rho_outer);
            }
        }
        if self.log_coeff != 0.0 {
            f += self.log_coeff * w.ln(); // principal branch
            df += self.log_coeff / (w * self.geometry.rho_outer);
        }
        // u = Re f, so ∇u = (Re f', −Im f')
        Ok((f, Point::new(df.re, -df.im)))
    }

    /// Boundary value in the single-valued convention of the stored Cauchy
    /// traces: the multivalued part i·b₀·θ is removed, leaving the real
    /// log contribution b₀·ln(ρ/ρ_e) in place.
    pub fn single_valued_trace_at(&self, tag: BoundaryTag, theta: f64) -> Complex64 {
        self.trace_at(tag, theta) - Complex64::new(0.0, self.log_coeff * wrap_angle(theta))
    }

    /// Outward radial derivative ∂u/∂ρ of u = Re f on the circle `tag`,
    /// from the analytic series. On the inner circle this is minus the
    /// normal derivative with respect to the annulus; emitted as-is so the
    /// trace can be reused as wall data for a smaller domain.
    pub fn radial_derivative(&self, tag: BoundaryTag, theta: f64) -> f64 {
        let rho = self.geometry.radius_of(tag);
        let w = Complex64::from_polar(rho / self.geometry.rho_outer, theta);
        let mut df = Complex64::ZERO;
        for (i, a) in self.coeffs.iter().enumerate() {
            let n = i as i64 - self.degree as i64;
            if n != 0 {
                df += a * (n as f64) * w.powi(n as i32) / (w * self.geometry.rho_outer);
            }
        }
        if self.log_coeff != 0.0 {
            df += self.log_coeff / (w * self.geometry.rho_outer);
        }
        (df * Complex64::from_polar(1.0, theta)).re
    }

    /// L²(dθ/2π) norm of the trace over both full circles.
    pub fn full_boundary_norm(&self) -> f64 {
        let n_quad = 64 * (self.degree + 2);
        let mut acc = 0.0;
        for tag in [BoundaryTag::Outer, BoundaryTag::Inner] {
            for k in 0..n_quad {
                let theta = std::f64::consts::TAU * k as f64 / n_quad as f64;
                acc += self.trace_at(tag, theta).norm_sqr() / n_quad as f64;
            }
        }
        acc.sqrt()
    }
}

/// Max over sample points of |∂̄ω − α ω̄| for ω = σ^{1/2} u + i σ^{-1/2} v,
/// α = ∂̄ log σ^{1/2}. Vanishes when (u, v) solve the conjugate system
/// v_r = −σ u_z, v_z = σ u_r.
///
/// All derivatives are central differences with step 1e-5 times the sample
/// diameter.
pub fn omega_transform_residual(
    u: &dyn Fn(Point) -> f64,
    v: &dyn Fn(Point) -> f64,
    sigma: &Conductivity,
    points: &[Point],
) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in points {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    let diameter = ((xmax - xmin).hypot(ymax - ymin)).max(1e-10);
    let h = 1e-5 * diameter;

    let omega = |p: Point| -> Complex64 {
        let s = sigma.eval(p);
        Complex64::new(s.sqrt() * u(p), v(p) / s.sqrt())
    };
    let log_sqrt_sigma = |p: Point| -> f64 { 0.5 * sigma.eval(p).ln() };

    let mut worst = 0.0_f64;
    for &p in points {
        let px = Point::new(p.x + h, p.y);
        let mx = Point::new(p.x - h, p.y);
        let py = Point::new(p.x, p.y + h);
        let my = Point::new(p.x, p.y - h);
        let d_x = (omega(px) - omega(mx)) / (2.0 * h);
        let d_y = (omega(py) - omega(my)) / (2.0 * h);
        let dbar_omega = 0.5 * (d_x + Complex64::i() * d_y);
        let a_x = (log_sqrt_sigma(px) - log_sqrt_sigma(mx)) / (2.0 * h);
        let a_y = (log_sqrt_sigma(py) - log_sqrt_sigma(my)) / (2.0 * h);
        let alpha = 0.5 * Complex64::new(a_x, a_y);
        let residual = (dbar_omega - alpha * omega(p).conj()).norm();
        worst = worst.max(residual);
    }
    worst
}
