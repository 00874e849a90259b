//! Boundary arcs on the two circles and composite Gauss-Legendre quadrature
//! for the L² pairings. All inner products use the normalized angular
//! measure dθ/2π per circle, so full-circle monomial traces are orthogonal
//! with norms (ρ/ρ_outer)^{2n}.

use std::f64::consts::TAU;

use crate::boundary_data::BoundaryTag;
use crate::error::BepError;
use crate::geometry::wrap_angle;

use super::AnnulusGeometry;

/// Angular arc on one boundary circle; `start < end`, `end - start <= 2π`.
/// Arcs may straddle θ = 0 (e.g. start = 3π/2, end = 5π/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryArc {
    pub tag: BoundaryTag,
    pub start: f64,
    pub end: f64,
}

impl BoundaryArc {
    pub fn new(tag: BoundaryTag, start: f64, end: f64) -> Result<Self, BepError> {
        if !(end > start) || end - start > TAU + 1e-12 {
            return Err(BepError::EmptyArc { a: start, b: end });
        }
        Ok(Self { tag, start, end })
    }

    pub fn full_circle(tag: BoundaryTag) -> Self {
        Self {
            tag,
            start: 0.0,
            end: TAU,
        }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// Whether a wrapped angle lies on this (possibly wrapping) arc.
    pub fn contains_angle(&self, theta: f64) -> bool {
        let t = wrap_angle(theta);
        let s = wrap_angle(self.start);
        let len = self.length();
        if len >= TAU - 1e-12 {
            return true;
        }
        let d = wrap_angle(t - s);
        d < len
    }
}

/// 8-point Gauss-Legendre rule on [-1, 1].
const GL8_NODES: [f64; 8] = [
    -0.9602898564975363,
    -0.7966664774136267,
    -0.5255324099163290,
    -0.1834346424956498,
    0.1834346424956498,
    0.5255324099163290,
    0.7966664774136267,
    0.9602898564975363,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.1012285362903763,
    0.2223810344533745,
    0.3137066458778873,
    0.3626837833783620,
    0.3626837833783620,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

/// Quadrature nodes on one arc: angles plus weights in the dθ/2π measure.
#[derive(Debug, Clone)]
pub struct QuadArc {
    pub tag: BoundaryTag,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Composite 8-point Gauss-Legendre panels, each spanning at most
/// `max_panel` radians.
pub fn quadrature_for_arc(arc: &BoundaryArc, max_panel: f64) -> QuadArc {
    let panels = ((arc.length() / max_panel).ceil() as usize).max(1);
    let dp = arc.length() / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 8);
    let mut weights = Vec::with_capacity(panels * 8);
    for p in 0..panels {
        let a = arc.start + p as f64 * dp;
        let mid = a + dp / 2.0;
        let half = dp / 2.0;
        for k in 0..8 {
            nodes.push(mid + half * GL8_NODES[k]);
            weights.push(half * GL8_WEIGHTS[k] / TAU);
        }
    }
    QuadArc {
        tag: arc.tag,
        nodes,
        weights,
    }
}

/// Splits the full two-circle boundary into a data region I and its
/// complement J, with ready-made quadrature on both.
#[derive(Debug, Clone)]
pub struct BoundaryPartition {
    pub geometry: AnnulusGeometry,
    pub arcs_i: Vec<BoundaryArc>,
    pub arcs_j: Vec<BoundaryArc>,
    pub quad_i: Vec<QuadArc>,
    pub quad_j: Vec<QuadArc>,
    pub max_panel: f64,
}

/// Default panel cap: π/32 radians per 8-point panel.
pub const DEFAULT_MAX_PANEL: f64 = std::f64::consts::PI / 32.0;

impl BoundaryPartition {
    /// J is the complement of I over both circles; it must have positive
    /// measure.
    pub fn complement(
        geometry: AnnulusGeometry,
        arcs_i: Vec<BoundaryArc>,
        max_panel: f64,
    ) -> Result<Self, BepError> {
        let mut arcs_j = Vec::new();
        for tag in [BoundaryTag::Outer, BoundaryTag::Inner] {
            let on_circle: Vec<&BoundaryArc> = arcs_i.iter().filter(|a| a.tag == tag).collect();
            arcs_j.extend(complement_on_circle(tag, &on_circle)?);
        }
        Self::new(geometry, arcs_i, arcs_j, max_panel)
    }

    pub fn new(
        geometry: AnnulusGeometry,
        arcs_i: Vec<BoundaryArc>,
        arcs_j: Vec<BoundaryArc>,
        max_panel: f64,
    ) -> Result<Self, BepError> {
        let measure_j: f64 = arcs_j.iter().map(|a| a.length()).sum();
        if measure_j <= 1e-12 {
            return Err(BepError::EmptyConstraintArc);
        }
        let quad_i = arcs_i
            .iter()
            .map(|a| quadrature_for_arc(a, max_panel))
            .collect::<Vec<_>>();
        let quad_j = arcs_j
            .iter()
            .map(|a| quadrature_for_arc(a, max_panel))
            .collect::<Vec<_>>();
        if quad_j
            .iter()
            .all(|q| q.weights.iter().all(|w| *w == 0.0))
        {
            return Err(BepError::DegenerateQuadrature);
        }
        Ok(Self {
            geometry,
            arcs_i,
            arcs_j,
            quad_i,
            quad_j,
            max_panel,
        })
    }
}

/// Complement of a union of arcs within one circle, as non-wrapping arcs.
fn complement_on_circle(
    tag: BoundaryTag,
    arcs: &[&BoundaryArc],
) -> Result<Vec<BoundaryArc>, BepError> {
    if arcs.is_empty() {
        return Ok(vec![BoundaryArc::full_circle(tag)]);
    }
    // normalize to non-wrapping intervals inside [0, 2π)
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for arc in arcs {
        let s = wrap_angle(arc.start);
        let e = s + arc.length();
        if e <= TAU + 1e-15 {
            intervals.push((s, e.min(TAU)));
        } else {
            intervals.push((s, TAU));
            intervals.push((0.0, e - TAU));
        }
    }
    intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // merge overlaps
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (s, e) in intervals {
        match merged.last_mut() {
            Some(last) if s <= last.1 + 1e-15 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    let mut out = Vec::new();
    let mut cursor = 0.0;
    for (s, e) in &merged {
        if *s > cursor + 1e-12 {
            out.push(BoundaryArc::new(tag, cursor, *s)?);
        }
        cursor = cursor.max(*e);
    }
    if cursor < TAU - 1e-12 {
        out.push(BoundaryArc::new(tag, cursor, TAU)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn geom() -> AnnulusGeometry {
        AnnulusGeometry::new(Point::new(2.42, 0.0), 0.46, 0.92).unwrap()
    }

    #[test]
    fn quadrature_integrates_smooth_arc() {
        let arc = BoundaryArc::new(BoundaryTag::Outer, 0.3, 2.1).unwrap();
        let q = quadrature_for_arc(&arc, DEFAULT_MAX_PANEL);
        // ∫ cos θ dθ / 2π over [0.3, 2.1]
        let got: f64 = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(t, w)| t.cos() * w)
            .sum();
        let expect = (2.1_f64.sin() - 0.3_f64.sin()) / TAU;
        assert!((got - expect).abs() < 1e-14);
    }

    #[test]
    fn complement_of_three_quarters() {
        let arcs = vec![BoundaryArc::new(BoundaryTag::Outer, 0.0, 1.5 * std::f64::consts::PI).unwrap()];
        let p = BoundaryPartition::complement(geom(), arcs, DEFAULT_MAX_PANEL).unwrap();
        // J = last quarter of the outer circle plus the whole inner circle
        let ji: Vec<_> = p.arcs_j.iter().filter(|a| a.tag == BoundaryTag::Outer).collect();
        assert_eq!(ji.len(), 1);
        assert!((ji[0].start - 1.5 * std::f64::consts::PI).abs() < 1e-12);
        assert!((ji[0].end - TAU).abs() < 1e-12);
        let inner: f64 = p
            .arcs_j
            .iter()
            .filter(|a| a.tag == BoundaryTag::Inner)
            .map(|a| a.length())
            .sum();
        assert!((inner - TAU).abs() < 1e-12);
    }

    #[test]
    fn complement_of_wrapping_arc() {
        let arcs =
            vec![BoundaryArc::new(BoundaryTag::Outer, 1.5 * std::f64::consts::PI, TAU + 1.0).unwrap()];
        let p = BoundaryPartition::complement(geom(), arcs, DEFAULT_MAX_PANEL).unwrap();
        let jo: Vec<_> = p.arcs_j.iter().filter(|a| a.tag == BoundaryTag::Outer).collect();
        assert_eq!(jo.len(), 1);
        assert!((jo[0].start - 1.0).abs() < 1e-12);
        assert!((jo[0].end - 1.5 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn full_data_cover_is_rejected_without_j() {
        let arcs = vec![
            BoundaryArc::full_circle(BoundaryTag::Outer),
            BoundaryArc::full_circle(BoundaryTag::Inner),
        ];
        assert!(matches!(
            BoundaryPartition::complement(geom(), arcs, DEFAULT_MAX_PANEL),
            Err(BepError::EmptyConstraintArc)
        ));
    }

    #[test]
    fn arc_membership_with_wrap() {
        let arc = BoundaryArc::new(BoundaryTag::Outer, 5.0, TAU + 1.0).unwrap();
        assert!(arc.contains_angle(5.5));
        assert!(arc.contains_angle(0.5));
        assert!(!arc.contains_angle(2.0));
    }
}
