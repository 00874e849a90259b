//! Error types, one enum per subsystem plus a flat `Error` used by callers
//! that cross module boundaries (the CLI maps these onto exit codes).

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("closed curve needs at least 8 vertices, got {got}")]
    TooFewVertices { got: usize },
    #[error("closed curve has a non-finite vertex")]
    NonFiniteVertex,
    #[error("closed curve must be counterclockwise (signed area {area})")]
    NotCounterClockwise { area: f64 },
    #[error("closed curve self-intersects (segments {seg_a} and {seg_b})")]
    SelfIntersecting { seg_a: usize, seg_b: usize },
    #[error("curve is not star-shaped about the requested center (ray θ={theta})")]
    NotStarShaped { theta: f64 },
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: non-finite value in column {column}")]
    NonFinite { row: usize, column: &'static str },
    #[error("row {row}: angle {theta} outside [0, 2π)")]
    AngleOutOfRange { row: usize, theta: f64 },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("angles not strictly increasing at row {row}")]
    NotIncreasing { row: usize },
    #[error("duplicate angle {theta} (rows {first} and {second})")]
    DuplicateAngle {
        theta: f64,
        first: usize,
        second: usize,
    },
    #[error("conductivity not positive at sample point ({x}, {y}): σ={value}")]
    NonPositiveSigma { x: f64, y: f64, value: f64 },
}

#[derive(Debug, Error)]
pub enum BepError {
    #[error("annulus radii must satisfy 0 < inner < outer (got {inner}, {outer})")]
    BadRadii { inner: f64, outer: f64 },
    #[error("boundary partition leaves no constraint arc of positive measure")]
    EmptyConstraintArc,
    #[error("arc [{a}, {b}] is empty or reversed")]
    EmptyArc { a: f64, b: f64 },
    #[error("Gram system is singular or not positive definite (degree {degree})")]
    GramSingular { degree: usize },
    #[error("quadrature degenerate: all weights zero")]
    DegenerateQuadrature,
    #[error("constraint bound M={bound} below the achievable floor {floor}")]
    ConstraintUnreachable { bound: f64, floor: f64 },
    #[error("point ({x}, {y}) lies outside the open annulus")]
    PointOutsideAnnulus { x: f64, y: f64 },
    #[error("trace must cover both boundary circles")]
    IncompleteTrace,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("gap between inner curve and outer circle is {gap}, need at least {need}")]
    GapTooSmall { gap: f64, need: f64 },
    #[error("triangle {index} is inverted or degenerate (signed area {area})")]
    InvertedTriangle { index: usize, area: f64 },
    #[error("generated mesh violates quality contract: min angle {min_angle_deg}° < 20°")]
    QualityContract { min_angle_deg: f64 },
    #[error("boundary tag {tag} not present in mesh")]
    TagMissing { tag: &'static str },
    #[error("deformation field must vanish on the outer boundary (node {node})")]
    NonzeroOuterVelocity { node: usize },
    #[error("mesh file {path}, line {line}: {reason}")]
    BadFile {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("mesh invariant violated: {reason}")]
    Invalid { reason: String },
}

#[derive(Debug, Error)]
pub enum FemError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("conductivity not positive at element {element} centroid: σ={value}")]
    NonPositiveSigma { element: usize, value: f64 },
    #[error("linear solver stalled: relative residual {residual} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },
    #[error("field length {got} does not match node count {nodes}")]
    FieldSizeMismatch { got: usize, nodes: usize },
    #[error("node {node} has r={r} <= 0; poloidal field undefined")]
    NonPositiveRadius { node: usize, r: f64 },
    #[error("flux conservation violated: net boundary flux {net} against scale {scale}")]
    ConservationViolated { net: f64, scale: f64 },
    #[error("discrete maximum principle violated at node {node}: {value} outside [{lo}, {hi}]")]
    MaxPrincipleViolated {
        node: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

#[derive(Debug, Error)]
pub enum OptError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("no acceptable step above t_min={t_min}; descent stagnated at J={j}")]
    Stagnation { t_min: f64, j: f64 },
    #[error("level {value} outside nodal range [{min}, {max}]")]
    LevelOutOfRange { value: f64, min: f64, max: f64 },
    #[error("level set produced {count} loops, expected exactly one closed curve")]
    LevelSetLoops { count: usize },
    #[error("level set {value} is not closed (chain reaches the boundary)")]
    LevelSetOpen { value: f64 },
    #[error("level set {value} does not cross the field")]
    LevelSetNoCrossing { value: f64 },
    #[error("limiter sample ({x}, {y}) is outside the solved domain; continuation level too low?")]
    LimiterOutsideDomain { x: f64, y: f64 },
}

/// Flat error for pipeline-level callers.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Bep(#[from] BepError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Opt(#[from] OptError),
}
