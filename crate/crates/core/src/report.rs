//! Plain-text artifact formats (all re-ingestable) and the SVG figure
//! writer. Floats are written with shortest round-trip formatting so
//! save → load is exact.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::DataError;
use crate::geometry::{ClosedCurve, Point};
use crate::hardy_bep::{AnnulusGeometry, LaurentModel};
use crate::shape_opt::OptimizationHistory;

fn write_text(path: &Path, text: &str) -> Result<(), DataError> {
    std::fs::write(path, text).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Closed curve as `x,y` rows.
pub fn save_curve(path: &Path, curve: &ClosedCurve) -> Result<(), DataError> {
    let mut text = String::from("x,y\n");
    for p in curve.points() {
        let _ = writeln!(text, "{},{}", p.x, p.y);
    }
    write_text(path, &text)
}

pub fn load_curve(path: &Path) -> Result<ClosedCurve, DataError> {
    let text = read_text(path)?;
    parse_curve(&text)
}

pub fn parse_curve(text: &str) -> Result<ClosedCurve, DataError> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header != "x,y" {
        return Err(DataError::MalformedRow {
            row: 1,
            reason: format!("expected header 'x,y', got '{header}'"),
        });
    }
    let mut pts = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let mut grab = |name: &'static str| -> Result<f64, DataError> {
            let raw = cols
                .next()
                .ok_or(DataError::MalformedRow {
                    row,
                    reason: format!("missing column {name}"),
                })?
                .trim();
            let v: f64 = raw.parse().map_err(|_| DataError::MalformedRow {
                row,
                reason: format!("column {name}: cannot parse '{raw}'"),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFinite { row, column: "x/y" });
            }
            Ok(v)
        };
        let x = grab("x")?;
        let y = grab("y")?;
        if cols.next().is_some() {
            return Err(DataError::MalformedRow {
                row,
                reason: "too many columns".into(),
            });
        }
        pts.push(Point::new(x, y));
    }
    ClosedCurve::new(pts).map_err(|e| DataError::MalformedRow {
        row: 0,
        reason: e.to_string(),
    })
}

/// Laurent coefficients as `n,re,im` rows plus one `log,b0,0` row.
pub fn save_laurent(path: &Path, model: &LaurentModel) -> Result<(), DataError> {
    let mut text = String::from("n,re,im\n");
    for (i, a) in model.coeffs.iter().enumerate() {
        let n = i as i64 - model.degree as i64;
        let _ = writeln!(text, "{},{},{}", n, a.re, a.im);
    }
    let _ = writeln!(text, "log,{},0", model.log_coeff);
    write_text(path, &text)
}

/// Reads coefficients back; the geometry is supplied by the caller.
pub fn load_laurent(path: &Path, geometry: AnnulusGeometry) -> Result<LaurentModel, DataError> {
    let text = read_text(path)?;
    parse_laurent(&text, geometry)
}

pub fn parse_laurent(text: &str, geometry: AnnulusGeometry) -> Result<LaurentModel, DataError> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header != "n,re,im" {
        return Err(DataError::MalformedRow {
            row: 1,
            reason: format!("expected header 'n,re,im', got '{header}'"),
        });
    }
    let mut entries: Vec<(i64, Complex64)> = Vec::new();
    let mut log_coeff = 0.0;
    for (idx, line) in lines {
        let row = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
        if cols.len() != 3 {
            return Err(DataError::MalformedRow {
                row,
                reason: "expected three columns".into(),
            });
        }
        let re: f64 = cols[1].parse().map_err(|_| DataError::MalformedRow {
            row,
            reason: format!("cannot parse '{}'", cols[1]),
        })?;
        let im: f64 = cols[2].parse().map_err(|_| DataError::MalformedRow {
            row,
            reason: format!("cannot parse '{}'", cols[2]),
        })?;
        if !re.is_finite() || !im.is_finite() {
            return Err(DataError::NonFinite {
                row,
                column: "re/im",
            });
        }
        if cols[0] == "log" {
            log_coeff = re;
        } else {
            let n: i64 = cols[0].parse().map_err(|_| DataError::MalformedRow {
                row,
                reason: format!("cannot parse index '{}'", cols[0]),
            })?;
            entries.push((n, Complex64::new(re, im)));
        }
    }
    let degree = entries
        .iter()
        .map(|(n, _)| n.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let mut coeffs = vec![Complex64::ZERO; 2 * degree + 1];
    for (n, a) in entries {
        coeffs[(n + degree as i64) as usize] = a;
    }
    LaurentModel::new(geometry, degree, coeffs, log_coeff).map_err(|e| DataError::MalformedRow {
        row: 0,
        reason: e.to_string(),
    })
}

/// One row of the completion report.
#[derive(Debug, Clone, Copy)]
pub struct BepReportRow {
    pub degree: usize,
    pub lambda: f64,
    pub error_i: f64,
    pub constraint_j: f64,
    pub bound: f64,
}

pub fn save_bep_report(path: &Path, rows: &[BepReportRow]) -> Result<(), DataError> {
    let mut text = String::from("N,lambda,error_I,constraint_J,M\n");
    for r in rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            r.degree, r.lambda, r.error_i, r.constraint_j, r.bound
        );
    }
    write_text(path, &text)
}

/// History as `iter,J,t,min_angle,grad_norm` rows.
pub fn save_history(path: &Path, history: &OptimizationHistory) -> Result<(), DataError> {
    let mut text = String::from("iter,J,t,min_angle,grad_norm\n");
    for r in &history.records {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            r.iter, r.j, r.step, r.min_angle_deg, r.grad_norm
        );
    }
    write_text(path, &text)
}

/// Nodal scalar field as `node,value` rows.
pub fn save_scalar_field(path: &Path, values: &[f64]) -> Result<(), DataError> {
    let mut text = String::from("node,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(text, "{},{}", i, v);
    }
    write_text(path, &text)
}

/// Nodal vector field as `node,vx,vy` rows.
pub fn save_vector_field(path: &Path, values: &[Point]) -> Result<(), DataError> {
    let mut text = String::from("node,vx,vy\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(text, "{},{},{}", i, v.x, v.y);
    }
    write_text(path, &text)
}

/// Stroke styling for one curve of an SVG figure.
#[derive(Debug, Clone)]
pub struct SvgCurveStyle {
    pub stroke: &'static str,
    pub width: f64,
    pub dashed: bool,
}

impl SvgCurveStyle {
    pub fn solid(stroke: &'static str, width: f64) -> Self {
        Self {
            stroke,
            width,
            dashed: false,
        }
    }

    pub fn dashed(stroke: &'static str, width: f64) -> Self {
        Self {
            stroke,
            width,
            dashed: true,
        }
    }
}

/// Layered closed curves as one SVG document (one closed path per curve,
/// outermost first).
pub fn render_svg(curves: &[(&ClosedCurve, SvgCurveStyle)]) -> String {
    let mut xmin = f64::MAX;
    let mut xmax = f64::MIN;
    let mut ymin = f64::MAX;
    let mut ymax = f64::MIN;
    for (c, _) in curves {
        for p in c.points() {
            xmin = xmin.min(p.x);
            xmax = xmax.max(p.x);
            ymin = ymin.min(p.y);
            ymax = ymax.max(p.y);
        }
    }
    let pad = 0.05 * ((xmax - xmin).max(ymax - ymin)).max(1e-9);
    let (x0, y0) = (xmin - pad, ymin - pad);
    let (w, h) = (xmax - xmin + 2.0 * pad, ymax - ymin + 2.0 * pad);
    let scale = 800.0 / w.max(h);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.3} {:.3}\">\n",
        w * scale,
        h * scale,
        w * scale,
        h * scale
    );
    // flip y so the poloidal plane reads with z upward
    let map = |p: Point| -> (f64, f64) { ((p.x - x0) * scale, (y0 + h - p.y) * scale) };
    for (c, style) in curves {
        let mut d = String::new();
        for (i, p) in c.points().iter().enumerate() {
            let (x, y) = map(*p);
            let _ = write!(d, "{}{:.3} {:.3} ", if i == 0 { "M" } else { "L" }, x, y);
        }
        d.push('Z');
        let dash = if style.dashed {
            " stroke-dasharray=\"8 6\""
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{:.2}\"{} />",
            d, style.stroke, style.width * scale, dash
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn save_svg(path: &Path, svg: &str) -> Result<(), DataError> {
    write_text(path, svg)
}
