//! Numerical laboratory for the nonlinear weighted heat equation
//!
//! ```text
//! ∂u/∂t = Δ_f u + a·u·ln u
//! ```
//!
//! on rotationally symmetric smooth metric measure spaces `(Mⁿ, g, e^{−f}dv)`
//! and on weighted circles. The crate solves the equation and turns the
//! gradient estimates, evolution inequalities, log-Sobolev bounds and
//! Liouville classification that accompany it into checks that can be run
//! against solved fields.
//!
//! Layout:
//! - [`geometry`]: model spaces, Bakry-Émery curvature, radial operators.
//! - [`discretize`]: uniform grids, finite differences, weighted quadrature.
//! - [`solver`]: IMEX time stepping and the exact spatially constant family.
//! - [`estimates`]: Hamilton and Souplet-Zhang bounds, Bochner identity,
//!   evolution-inequality residuals and the space-time cutoff.
//! - [`logsobolev`]: spectral gap, log-Sobolev constant and Chung-Yau bounds
//!   on circles, plus the Liouville classifier.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretize;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod linalg;
pub mod logsobolev;
pub mod solver;

pub use error::{LabError, Result};
