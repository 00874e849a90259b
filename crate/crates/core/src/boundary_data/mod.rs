//! Measured Cauchy data on the outer wall: ingestion, validation, periodic
//! spline interpolation, the conjugate-trace construction F_d = u + iv and
//! flux-balance diagnostics.

mod spline;

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::DataError;
use crate::geometry::{Circle, Point};

pub use spline::{fit_periodic_spline, PeriodicSpline};

/// Which boundary circle a trace arc lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Outer,
    Inner,
}

/// Measured (θ, u₀, u₁) samples on the outer circle.
#[derive(Debug, Clone)]
pub struct BoundarySamples {
    theta: Vec<f64>,
    u0: Vec<f64>,
    u1: Vec<f64>,
    pub circle_center: Point,
    pub circle_radius: f64,
}

impl BoundarySamples {
    pub fn new(
        theta: Vec<f64>,
        u0: Vec<f64>,
        u1: Vec<f64>,
        circle_center: Point,
        circle_radius: f64,
    ) -> Result<Self, DataError> {
        if theta.len() < 4 {
            return Err(DataError::TooFewSamples {
                got: theta.len(),
                need: 4,
            });
        }
        if u0.len() != theta.len() || u1.len() != theta.len() {
            return Err(DataError::MalformedRow {
                row: 0,
                reason: "column lengths differ".into(),
            });
        }
        for i in 0..theta.len() {
            if !theta[i].is_finite() {
                return Err(DataError::NonFinite {
                    row: i,
                    column: "theta",
                });
            }
            if !u0[i].is_finite() {
                return Err(DataError::NonFinite {
                    row: i,
                    column: "u0",
                });
            }
            if !u1[i].is_finite() {
                return Err(DataError::NonFinite {
                    row: i,
                    column: "u1",
                });
            }
            if !(0.0..TAU).contains(&theta[i]) {
                return Err(DataError::AngleOutOfRange {
                    row: i,
                    theta: theta[i],
                });
            }
            if i > 0 && theta[i] <= theta[i - 1] {
                return Err(DataError::NotIncreasing { row: i });
            }
        }
        Ok(Self {
            theta,
            u0,
            u1,
            circle_center,
            circle_radius,
        })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn u0(&self) -> &[f64] {
        &self.u0
    }

    pub fn u1(&self) -> &[f64] {
        &self.u1
    }

    pub fn circle(&self) -> Circle {
        Circle::new(self.circle_center, self.circle_radius)
    }

    pub fn u0_spline(&self) -> Result<PeriodicSpline, DataError> {
        fit_periodic_spline(&self.theta, &self.u0)
    }

    pub fn u1_spline(&self) -> Result<PeriodicSpline, DataError> {
        fit_periodic_spline(&self.theta, &self.u1)
    }
}

/// Parses the measurement CSV (`theta,u0,u1` header, radians, decimal dot).
///
/// Angles are sorted and exact duplicate rows dropped; duplicate angles with
/// conflicting values are an error. The circle geometry is not part of the
/// file and is supplied by the caller.
pub fn load_measurements(
    path: &Path,
    circle_center: Point,
    circle_radius: f64,
) -> Result<BoundarySamples, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let samples = parse_measurements(&text)?;
    let mut rows = samples;
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // drop byte-identical duplicates, reject conflicting ones
    let mut theta = Vec::with_capacity(rows.len());
    let mut u0 = Vec::with_capacity(rows.len());
    let mut u1 = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if let Some(last) = theta.last() {
            if row.0 == *last {
                let lu0: f64 = *u0.last().unwrap();
                let lu1: f64 = *u1.last().unwrap();
                if row.1 == lu0 && row.2 == lu1 {
                    continue;
                }
                return Err(DataError::DuplicateAngle {
                    theta: row.0,
                    first: i - 1,
                    second: i,
                });
            }
        }
        theta.push(row.0);
        u0.push(row.1);
        u1.push(row.2);
    }
    BoundarySamples::new(theta, u0, u1, circle_center, circle_radius)
}

/// Pure parser for the measurement CSV body; row numbers are 1-based file
/// lines so errors point at the offending line.
pub fn parse_measurements(text: &str) -> Result<Vec<(f64, f64, f64)>, DataError> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header != "theta,u0,u1" {
        return Err(DataError::MalformedRow {
            row: 1,
            reason: format!("expected header 'theta,u0,u1', got '{header}'"),
        });
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next_field = |name: &'static str| -> Result<f64, DataError> {
            let raw = fields
                .next()
                .ok_or_else(|| DataError::MalformedRow {
                    row,
                    reason: format!("missing column {name}"),
                })?
                .trim();
            raw.parse::<f64>().map_err(|_| DataError::MalformedRow {
                row,
                reason: format!("column {name}: cannot parse '{raw}'"),
            })
        };
        let theta = next_field("theta")?;
        let u0 = next_field("u0")?;
        let u1 = next_field("u1")?;
        if fields.next().is_some() {
            return Err(DataError::MalformedRow {
                row,
                reason: "too many columns".into(),
            });
        }
        if !theta.is_finite() {
            return Err(DataError::NonFinite {
                row,
                column: "theta",
            });
        }
        if !u0.is_finite() {
            return Err(DataError::NonFinite { row, column: "u0" });
        }
        if !u1.is_finite() {
            return Err(DataError::NonFinite { row, column: "u1" });
        }
        if !(0.0..TAU).contains(&theta) {
            return Err(DataError::AngleOutOfRange { row, theta });
        }
        out.push((theta, u0, u1));
    }
    if out.len() < 4 {
        return Err(DataError::TooFewSamples {
            got: out.len(),
            need: 4,
        });
    }
    Ok(out)
}

/// Writes the measurement CSV with shortest round-trip float formatting,
/// so save → load reproduces the samples bit-exactly.
pub fn save_measurements(path: &Path, samples: &BoundarySamples) -> Result<(), DataError> {
    let mut text = String::from("theta,u0,u1\n");
    for i in 0..samples.len() {
        let _ = writeln!(
            text,
            "{},{},{}",
            samples.theta[i], samples.u0[i], samples.u1[i]
        );
    }
    std::fs::write(path, text).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Conductivity coefficient σ of the divergence-form equation.
#[derive(Debug, Clone)]
pub enum ConductivityForm {
    Constant(f64),
    /// σ(r, z) = 1/r — the poloidal-flux coefficient.
    InverseR,
    Tabulated(SigmaGrid),
}

/// Rectangular grid with bilinear interpolation, clamped at the border.
#[derive(Debug, Clone)]
pub struct SigmaGrid {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
    /// row-major, ny rows of nx values
    pub values: Vec<f64>,
}

impl SigmaGrid {
    fn eval(&self, p: Point) -> f64 {
        let fx = ((p.x - self.x0) / self.dx).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.y0) / self.dy).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx as usize).min(self.nx - 2);
        let j = (fy as usize).min(self.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v = |i: usize, j: usize| self.values[j * self.nx + i];
        (1.0 - tx) * (1.0 - ty) * v(i, j)
            + tx * (1.0 - ty) * v(i + 1, j)
            + (1.0 - tx) * ty * v(i, j + 1)
            + tx * ty * v(i + 1, j + 1)
    }
}

#[derive(Debug, Clone)]
pub struct Conductivity {
    pub form: ConductivityForm,
    /// ellipticity bounds (C₁, C₂) with 0 < C₁ ≤ σ ≤ C₂ on the domain
    pub bounds: (f64, f64),
}

impl Conductivity {
    pub fn constant(value: f64) -> Self {
        Self {
            form: ConductivityForm::Constant(value),
            bounds: (value, value),
        }
    }

    /// σ = 1/r with ellipticity bounds derived from the radial extent of the
    /// domain (r ∈ [r_min, r_max], both positive).
    pub fn inverse_r(r_min: f64, r_max: f64) -> Self {
        Self {
            form: ConductivityForm::InverseR,
            bounds: (1.0 / r_max, 1.0 / r_min),
        }
    }

    pub fn tabulated(grid: SigmaGrid, bounds: (f64, f64)) -> Self {
        Self {
            form: ConductivityForm::Tabulated(grid),
            bounds,
        }
    }

    pub fn eval(&self, p: Point) -> f64 {
        match &self.form {
            ConductivityForm::Constant(v) => *v,
            ConductivityForm::InverseR => 1.0 / p.x,
            ConductivityForm::Tabulated(g) => g.eval(p),
        }
    }

    /// Checks 0 < C₁ ≤ σ ≤ C₂ on a sample of evaluation points.
    pub fn validate_on<I: IntoIterator<Item = Point>>(&self, points: I) -> Result<(), DataError> {
        let (c1, c2) = self.bounds;
        let slack = 1e-12 * c2.max(1.0);
        for p in points {
            let s = self.eval(p);
            if !(s > 0.0) || s < c1 - slack || s > c2 + slack {
                return Err(DataError::NonPositiveSigma {
                    x: p.x,
                    y: p.y,
                    value: s,
                });
            }
        }
        Ok(())
    }

    /// ν = (1 − σ)/(1 + σ), the coefficient of the first-order complex form.
    pub fn nu(&self, p: Point) -> f64 {
        let s = self.eval(p);
        (1.0 - s) / (1.0 + s)
    }

    /// Sup bound κ of |ν| derived from the ellipticity bounds.
    pub fn beltrami_bound(&self) -> f64 {
        let (c1, c2) = self.bounds;
        let k1 = ((1.0 - c1) / (1.0 + c1)).abs();
        let k2 = ((1.0 - c2) / (1.0 + c2)).abs();
        k1.max(k2)
    }
}

/// Boundary values of f = u + iv on tagged arcs.
#[derive(Debug, Clone)]
pub struct TraceArc {
    pub tag: BoundaryTag,
    pub theta: Vec<f64>,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, Default)]
pub struct ComplexTrace {
    pub arcs: Vec<TraceArc>,
}

impl ComplexTrace {
    pub fn new(arcs: Vec<TraceArc>) -> Result<Self, DataError> {
        for arc in &arcs {
            if arc.theta.len() != arc.values.len() {
                return Err(DataError::MalformedRow {
                    row: 0,
                    reason: "trace arc angle/value lengths differ".into(),
                });
            }
            for i in 0..arc.theta.len() {
                if !arc.theta[i].is_finite() {
                    return Err(DataError::NonFinite {
                        row: i,
                        column: "theta",
                    });
                }
                if !arc.values[i].re.is_finite() || !arc.values[i].im.is_finite() {
                    return Err(DataError::NonFinite {
                        row: i,
                        column: "value",
                    });
                }
                if i > 0 && arc.theta[i] <= arc.theta[i - 1] {
                    return Err(DataError::NotIncreasing { row: i });
                }
            }
        }
        Ok(Self { arcs })
    }
}

/// Indices violating the physical frame conditions u₁ < 0 and u₀ < c.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AssumptionReport {
    pub u1_nonnegative: Vec<usize>,
    pub u0_at_or_above_level: Vec<usize>,
}

impl AssumptionReport {
    pub fn holds(&self) -> bool {
        self.u1_nonnegative.is_empty() && self.u0_at_or_above_level.is_empty()
    }
}

pub fn check_physical_assumptions(samples: &BoundarySamples, c: f64) -> AssumptionReport {
    let mut report = AssumptionReport::default();
    for (i, &v) in samples.u1.iter().enumerate() {
        if v >= 0.0 {
            report.u1_nonnegative.push(i);
        }
    }
    for (i, &v) in samples.u0.iter().enumerate() {
        if v >= c {
            report.u0_at_or_above_level.push(i);
        }
    }
    report
}

/// Builds the complex Cauchy trace F_d = u + iv on the outer circle.
///
/// v(θ) = ∫₀^θ σ u₁ ds along the circle (arc length, counterclockwise),
/// anchored by v(0) = 0. The total flux Φ = ∮ σ u₁ ds is returned
/// separately; when Φ ≠ 0 the linear-in-angle part Φ·θ/2π is subtracted so
/// the stored v is single-valued, and the caller attaches Φ/2π to the
/// log coefficient of the series model.
///
/// Quadrature is composite Simpson on the splines with `quad_points`
/// subintervals around the full circle (at least 2·n_points).
pub fn build_cauchy_trace(
    u0: &PeriodicSpline,
    u1: &PeriodicSpline,
    sigma: &Conductivity,
    circle: Circle,
    n_points: usize,
    quad_points: usize,
) -> Result<(ComplexTrace, f64), DataError> {
    if n_points < 8 {
        return Err(DataError::TooFewSamples {
            got: n_points,
            need: 8,
        });
    }
    // even number of Simpson subpanels per output interval
    let per = (quad_points.max(2 * n_points)).div_ceil(n_points);
    let per = per + per % 2;
    let integrand = |t: f64| sigma.eval(circle.at(t)) * u1.eval(t) * circle.radius;

    let dt = TAU / n_points as f64;
    let mut v = vec![0.0; n_points + 1];
    for k in 0..n_points {
        let a = k as f64 * dt;
        let h = dt / per as f64;
        // composite Simpson over [a, a+dt]
        let mut acc = integrand(a) + integrand(a + dt);
        for j in 1..per {
            let w = if j % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * integrand(a + j as f64 * h);
        }
        v[k + 1] = v[k] + acc * h / 3.0;
    }
    let flux = v[n_points];

    let theta: Vec<f64> = (0..n_points).map(|k| k as f64 * dt).collect();
    let values: Vec<Complex64> = (0..n_points)
        .map(|k| {
            let single_valued = v[k] - flux * theta[k] / TAU;
            Complex64::new(u0.eval(theta[k]), single_valued)
        })
        .collect();

    let trace = ComplexTrace::new(vec![TraceArc {
        tag: BoundaryTag::Outer,
        theta,
        values,
    }])?;
    Ok((trace, flux))
}
