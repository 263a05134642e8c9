//! Seeded Monte Carlo over the standard Gaussian.
//!
//! Samples are drawn in fixed chunks of [`CHUNK`] points. Chunk `c` uses a
//! ChaCha8 stream keyed by `(seed, c)`, so a chunk's points do not depend on
//! which worker draws them. Per-chunk sums are reduced in chunk order, which
//! makes every estimate bit-for-bit independent of the worker count.

use crate::bodies::MAX_DIM;
use crate::error::{GbmError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const CHUNK: u64 = 16384;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingBudget {
    pub samples: u64,
    pub seed: u64,
}

impl SamplingBudget {
    pub fn new(samples: u64, seed: u64) -> Self {
        SamplingBudget { samples, seed }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SamplingBudget { seed, ..self }
    }
}

/// Sample means and covariances of `k` integrands evaluated on shared points.
#[derive(Clone, Debug)]
pub struct Moments {
    pub samples: u64,
    pub k: usize,
    sums: Vec<f64>,
    /// Upper triangle of Σ fᵢ fⱼ, row-major `k × k`; empty unless requested.
    cross: Vec<f64>,
}

impl Moments {
    pub fn mean(&self, i: usize) -> f64 {
        self.sums[i] / self.samples as f64
    }

    pub fn sum(&self, i: usize) -> f64 {
        self.sums[i]
    }

    /// Unbiased sample covariance of integrands `i` and `j`.
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        assert!(!self.cross.is_empty(), "covariances were not accumulated");
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let n = self.samples as f64;
        if self.samples < 2 {
            return 0.0;
        }
        let c = (self.cross[a * self.k + b] - self.sums[a] * self.sums[b] / n) / (n - 1.0);
        if a == b {
            c.max(0.0)
        } else {
            c
        }
    }

    /// Covariance of the two sample means.
    pub fn cov_of_means(&self, i: usize, j: usize) -> f64 {
        self.cov(i, j) / self.samples as f64
    }

    pub fn se_of_mean(&self, i: usize) -> f64 {
        self.cov_of_means(i, i).sqrt()
    }
}

/// Estimates `E f(X)` for `X ~ N(0, I_dim)`, where `f` writes `k` values per point.
pub fn sample_moments<F>(
    dim: usize,
    budget: SamplingBudget,
    k: usize,
    with_cross: bool,
    f: F,
) -> Result<Moments>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    if dim == 0 || dim > MAX_DIM {
        return Err(GbmError::invalid(format!("sampling dimension {dim} out of range")));
    }
    if budget.samples == 0 {
        return Err(GbmError::invalid("Monte Carlo budget of zero samples"));
    }
    let chunks = budget.samples.div_ceil(CHUNK);
    let width = if with_cross { k * k } else { 0 };
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
            rng.set_stream(c);
            let count = CHUNK.min(budget.samples - c * CHUNK);
            let mut sums = vec![0.0; k];
            let mut cross = vec![0.0; width];
            let mut x = [0.0f64; MAX_DIM];
            let mut vals = vec![0.0; k];
            for _ in 0..count {
                for xi in x[..dim].iter_mut() {
                    *xi = rng.sample(StandardNormal);
                }
                f(&x[..dim], &mut vals);
                for i in 0..k {
                    sums[i] += vals[i];
                }
                if with_cross {
                    for i in 0..k {
                        let vi = vals[i];
                        if vi == 0.0 {
                            continue;
                        }
                        for j in i..k {
                            cross[i * k + j] += vi * vals[j];
                        }
                    }
                }
            }
            (sums, cross)
        })
        .collect();
    let mut sums = vec![0.0; k];
    let mut cross = vec![0.0; width];
    for (s, c) in &partial {
        for i in 0..k {
            sums[i] += s[i];
        }
        for i in 0..width {
            cross[i] += c[i];
        }
    }
    Ok(Moments { samples: budget.samples, k, sums, cross })
}
