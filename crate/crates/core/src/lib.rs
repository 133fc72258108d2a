//! Numerical solvers for the limiting two-time dynamics of spherical mixed
//! p-spin glasses.
//!
//! - [`model`]: the mixture polynomial, confining potentials and critical
//!   constants.
//! - [`noncrossing`]: non-crossing pairings and the response kernel `H`.
//! - [`fdt`]: the one-time stationary equation, solved two ways.
//! - [`twotime`]: the full two-time integro-differential systems.
//! - [`langevin`]: finite-N Langevin simulation used as an empirical check.
//! - [`acceptance`]: the end-to-end verification suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod error;
pub mod fdt;
pub mod langevin;
pub mod mesh;
pub mod model;
pub mod noncrossing;
mod roots;
pub mod twotime;

/// Library version recorded in every emitted artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use mesh::Triangle;
pub use model::{Covariance, CriticalProfile, MixturePolynomial, Phi, SoftPotential};
