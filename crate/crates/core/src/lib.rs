//! Gaussian-measure rescaling, Wiener chaos and compact limit set verification.
//!
//! The crate is organised bottom-up:
//!
//! * [`cm_space`] - discretized Cameron–Martin spaces and their norms
//! * [`gaussian_sim`] - seeded Brownian, fractional Brownian and white-noise samplers
//! * [`operators`] - scaling families, adjoint and mixing diagnostics
//! * [`chaos`] - Hermite polynomials, chaos functionals and their homogeneous forms
//! * [`limit_set`] - containment, coverage and iterated-logarithm statistics
//! * [`spde`] - heat-equation solvers, Cole–Hopf KPZ and membership functionals
//! * [`scenario`] - configuration-driven scenario runs and their reports
//! * [`suite`] - the acceptance criteria shared by tests and the command line

// `!(x > y)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chaos;
pub mod cm_space;
pub mod error;
pub mod gaussian_sim;
pub mod grid;
pub mod limit_set;
pub mod mc;
pub mod operators;
pub mod rng;
pub mod spde;
pub mod stats;
pub mod scenario;
pub mod suite;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
