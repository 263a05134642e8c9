//! Fixed workloads shared by the benchmarks.

use gbm_core::{Body, Result};

/// A 3-D polytope with no closed-form measure, so `measure` samples.
pub fn sampled_polytope() -> Result<Body> {
    Body::sym_polytope(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.5, 0.5, 0.5]])
}

/// A planar Minkowski combination, the slowest membership oracle in the PDE suite.
pub fn planar_combo() -> Result<Body> {
    Body::minkowski_combine(0.5, &Body::cuboid(vec![0.8, 0.8])?, &Body::ball(2, 1.0)?)
}

pub const MC_SAMPLES: u64 = 200_000;
pub const PDE_H: f64 = 0.04;
