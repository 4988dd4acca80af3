//! Multirate multiphysics finite element solver for fluid-saturated
//! poroelasticity in two dimensions.
//!
//! The Biot system is rewritten in terms of two pseudo-pressures
//! `xi = alpha p - lambda div u` and `eta = c0 p + alpha div u`. The pair
//! `(u, xi)` then solves a generalized Stokes problem (Taylor–Hood P2/P1)
//! and `eta` solves a P1 diffusion problem. The time integrator advances the
//! Stokes part on a coarse step `m * dt` and the diffusion part on the fine
//! step `dt`.
//!
//! Module map:
//!
//! * [`mesh`]: structured triangulations of the unit square and quadrature.
//! * [`fem`]: Taylor–Hood spaces, basis evaluation, rigid motions.
//! * [`assembly`]: sparse matrices, bilinear forms, loads, boundary data.
//! * [`linsolve`]: SPD and saddle-point direct solvers.
//! * [`model`]: physical parameters and the variable change.
//! * [`projections`]: elliptic, gradient and L2 projections.
//! * [`scheme`]: the multirate time integrator.
//! * [`diagnostics`]: energy law, conservation laws, error norms, rates.
//! * [`cases`]: benchmark problem definitions.

pub mod assembly;
pub mod cases;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod linsolve;
pub mod mesh;
pub mod model;
pub mod projections;
pub mod scheme;

pub use error::{Error, Result};
