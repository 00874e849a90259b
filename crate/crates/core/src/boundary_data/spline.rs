//! Periodic cubic spline interpolation on [0, 2π).
//!
//! The spline is built in moment form: second derivatives at the knots solve
//! a cyclic tridiagonal system (Thomas + Sherman-Morrison), which enforces C²
//! continuity across every knot including the wrap-around interval.

use std::f64::consts::TAU;

use crate::error::DataError;
use crate::geometry::wrap_angle;

#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    knots: Vec<f64>,
    /// per-interval cubic a + b s + c s² + d s³ in s = θ − knot[i]
    coeffs: Vec<[f64; 4]>,
    period: f64,
}

impl PeriodicSpline {
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let (i, s) = self.locate(theta);
        let [a, b, c, d] = self.coeffs[i];
        a + s * (b + s * (c + s * d))
    }

    pub fn eval_deriv(&self, theta: f64) -> f64 {
        let (i, s) = self.locate(theta);
        let [_, b, c, d] = self.coeffs[i];
        b + s * (2.0 * c + s * 3.0 * d)
    }

    pub fn eval_second_deriv(&self, theta: f64) -> f64 {
        let (i, s) = self.locate(theta);
        let [_, _, c, d] = self.coeffs[i];
        2.0 * c + 6.0 * d * s
    }

    /// Interval index and local coordinate for a (wrapped) angle.
    fn locate(&self, theta: f64) -> (usize, f64) {
        let t0 = self.knots[0];
        let t = t0 + wrap_angle(theta - t0);
        // partition_point returns the first knot strictly above t
        let i = match self.knots.partition_point(|&k| k <= t) {
            0 => self.knots.len() - 1, // t in the wrap interval below knot 0
            p => p - 1,
        };
        (i, t - self.knots[i])
    }
}

/// Interpolating periodic cubic spline through (theta, value) pairs.
///
/// Angles must be strictly increasing in [0, 2π); at least 4 points.
pub fn fit_periodic_spline(theta: &[f64], values: &[f64]) -> Result<PeriodicSpline, DataError> {
    let n = theta.len();
    if n < 4 {
        return Err(DataError::TooFewSamples { got: n, need: 4 });
    }
    if values.len() != n {
        return Err(DataError::MalformedRow {
            row: 0,
            reason: format!("{} angles but {} values", n, values.len()),
        });
    }
    for i in 0..n {
        if !theta[i].is_finite() {
            return Err(DataError::NonFinite {
                row: i,
                column: "theta",
            });
        }
        if !values[i].is_finite() {
            return Err(DataError::NonFinite {
                row: i,
                column: "value",
            });
        }
        if !(0.0..TAU).contains(&theta[i]) {
            return Err(DataError::AngleOutOfRange {
                row: i,
                theta: theta[i],
            });
        }
    }
    for i in 1..n {
        if theta[i] == theta[i - 1] {
            return Err(DataError::DuplicateAngle {
                theta: theta[i],
                first: i - 1,
                second: i,
            });
        }
        if theta[i] < theta[i - 1] {
            return Err(DataError::NotIncreasing { row: i });
        }
    }

    // interval widths, h[n-1] wraps around the period
    let mut h = vec![0.0; n];
    for i in 0..n - 1 {
        h[i] = theta[i + 1] - theta[i];
    }
    h[n - 1] = theta[0] + TAU - theta[n - 1];

    // cyclic tridiagonal system for the knot second derivatives
    let sub: Vec<f64> = (0..n).map(|i| h[(i + n - 1) % n] / 6.0).collect();
    let diag: Vec<f64> = (0..n)
        .map(|i| (h[(i + n - 1) % n] + h[i]) / 3.0)
        .collect();
    let sup: Vec<f64> = (0..n).map(|i| h[i] / 6.0).collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            let im1 = (i + n - 1) % n;
            let ip1 = (i + 1) % n;
            (values[ip1] - values[i]) / h[i] - (values[i] - values[im1]) / h[im1]
        })
        .collect();

    let moments = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);

    let coeffs = (0..n)
        .map(|i| {
            let ip1 = (i + 1) % n;
            let a = values[i];
            let c = moments[i] / 2.0;
            let d = (moments[ip1] - moments[i]) / (6.0 * h[i]);
            let b =
                (values[ip1] - values[i]) / h[i] - h[i] * (2.0 * moments[i] + moments[ip1]) / 6.0;
            [a, b, c, d]
        })
        .collect();

    Ok(PeriodicSpline {
        knots: theta.to_vec(),
        coeffs,
        period: TAU,
    })
}

/// Thomas algorithm for a strictly tridiagonal system; overwrites nothing.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c_star = vec![0.0; n];
    let mut d_star = vec![0.0; n];
    c_star[0] = sup[0] / diag[0];
    d_star[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c_star[i - 1];
        c_star[i] = sup[i] / m;
        d_star[i] = (rhs[i] - sub[i] * d_star[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d_star[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d_star[i] - c_star[i] * x[i + 1];
    }
    x
}

/// Cyclic tridiagonal solve via the Sherman-Morrison correction.
/// `sub[0]` couples row 0 to column n-1 and `sup[n-1]` row n-1 to column 0.
fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 3);
    let alpha = sup[n - 1]; // corner (n-1, 0)
    let beta = sub[0]; // corner (0, n-1)
    let gamma = -diag[0];

    let mut diag_mod = diag.to_vec();
    diag_mod[0] -= gamma;
    diag_mod[n - 1] -= alpha * beta / gamma;

    let y = solve_tridiagonal(sub, &diag_mod, sup, rhs);

    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(sub, &diag_mod, sup, &u);

    // v = (1, 0, ..., 0, beta/gamma)
    let v_dot_y = y[0] + beta / gamma * y[n - 1];
    let v_dot_z = z[0] + beta / gamma * z[n - 1];
    let factor = v_dot_y / (1.0 + v_dot_z);

    (0..n).map(|i| y[i] - factor * z[i]).collect()
}
