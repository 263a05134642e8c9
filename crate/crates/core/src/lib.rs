//! Numerical laboratory for the dimensional Gaussian Brunn–Minkowski inequality.
//!
//! The crate is organised around five subsystems:
//!
//! - [`bodies`]: symmetric convex (and star-shaped) sets described by support,
//!   membership and radial oracles, with Minkowski combinations, geometric means
//!   and dilates.
//! - [`gaussmeasure`]: the standard Gaussian measure of bodies, the radial profile
//!   `Ψₙ(r) = γₙ(rB)`, its inverse and second moments, exact where closed forms
//!   exist and by seeded Monte Carlo otherwise.
//! - [`sigma`]: tabulation of the strictly increasing refinement function `σₙ`
//!   defined by its second-order ODE in the radial parameter.
//! - [`localpde`]: the Ornstein–Uhlenbeck operator on masked grids, Dirichlet solves
//!   of `𝓛u = f`, the Hessian/gradient functional and the truncated-slab experiment.
//! - [`checks`]: every inequality turned into a reproducible verdict with error bars.

pub mod bodies;
pub mod checks;
pub mod error;
pub mod gaussmeasure;
pub mod localpde;
pub mod numeric;
pub mod sigma;

pub use bodies::{Body, BodyKind, Direction};
pub use checks::{CheckCase, CheckResult, Verdict};
pub use error::{GbmError, Result};
pub use gaussmeasure::{MeasureEstimate, Method, SamplingBudget};
pub use sigma::SigmaTable;
