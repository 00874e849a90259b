//! Magnetic Cauchy-data completion and free plasma-boundary recovery for the
//! degenerate-conductivity equation ∇·((1/r)∇u) = 0 on an annular section.
//!
//! Pipeline stages:
//! - [`boundary_data`]: measurement ingestion, periodic splines, the
//!   conjugate trace F_d = u + iv and flux diagnostics;
//! - [`hardy_bep`]: series approximation on the annulus and the bounded
//!   extremal problem that completes data from an outer arc to the inner
//!   circle;
//! - [`mesh`] / [`fem`]: P1 triangulations of the moving annular domain and
//!   the elliptic solves (state, adjoint, descent-field extension);
//! - [`shape_opt`]: adjoint shape-gradient descent on the Cauchy misfit,
//!   level-set extraction and recovery of the boundary flux constant;
//! - [`synth`]: synthetic measurement generation from a known inner curve;
//! - [`report`]: the plain-text file formats and SVG figures.

pub mod boundary_data;
pub mod error;
pub mod geometry;
pub mod hardy_bep;
pub mod fem;
pub mod mesh;
pub mod report;
pub mod shape_opt;
pub mod synth;

pub use error::Error;
