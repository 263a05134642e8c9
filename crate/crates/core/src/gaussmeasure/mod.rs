//! Gaussian measures and second moments of bodies.
//!
//! Closed forms are used for balls, boxes, halfspaces and slabs; axis-aligned
//! ellipsoids in two and three dimensions are integrated along the sphere;
//! everything else goes through seeded Monte Carlo.

pub mod mc;
pub mod special;

pub use mc::{sample_moments, Moments, SamplingBudget, CHUNK};
pub use special::{
    ball_second_moment, c_n, normal_pdf, phi, phi_inv, psi_n, psi_n_complement,
    psi_n_complement_inv, psi_n_inv, psi_n_prime,
};

use crate::bodies::{Body, BodyKind};
use crate::error::{GbmError, Result};
use crate::numeric::GaussLegendre;
use serde::{Deserialize, Serialize};

/// Monte Carlo refuses estimates backed by fewer hits than this.
pub const MIN_HITS: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "exact-closed-form")]
    Exact,
    #[serde(rename = "quadrature-1d")]
    Quadrature,
    #[serde(rename = "monte-carlo")]
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    /// The body was an outer approximation, so `value` is biased upward.
    #[serde(default)]
    pub outer_biased: bool,
}

impl MeasureEstimate {
    pub fn exact(value: f64) -> Self {
        MeasureEstimate {
            value,
            std_error: 0.0,
            method: Method::Exact,
            samples: None,
            seed: None,
            outer_biased: false,
        }
    }

    fn quadrature(value: f64) -> Self {
        MeasureEstimate { method: Method::Quadrature, ..MeasureEstimate::exact(value) }
    }

    pub fn is_exact(&self) -> bool {
        self.method != Method::MonteCarlo
    }
}

/// `2Φ(a) − 1`.
fn interval_mass(a: f64) -> f64 {
    special::gamma_p(0.5, 0.5 * a * a)
}

/// `∫_{−a}^{a} t² φ(t) dt`.
fn interval_second(a: f64) -> f64 {
    special::gamma_p(1.5, 0.5 * a * a)
}

/// Closed-form or quadrature value of `γₙ(K)` when available.
pub fn measure_exact(body: &Body) -> Option<MeasureEstimate> {
    let b = body.effective();
    let n = b.dim();
    match b.kind() {
        BodyKind::Ball { radius } => Some(MeasureEstimate::exact(psi_n(*radius, n))),
        BodyKind::Box { half_widths } => {
            Some(MeasureEstimate::exact(half_widths.iter().map(|&a| interval_mass(a)).product()))
        }
        BodyKind::Halfspace { offset, .. } => Some(MeasureEstimate::exact(phi(*offset))),
        BodyKind::Slab { half_width, cap_radius, .. } => {
            let along = interval_mass(*half_width);
            let perp = match cap_radius {
                Some(c) if n > 1 => psi_n(*c, n - 1),
                _ => 1.0,
            };
            Some(MeasureEstimate::exact(along * perp))
        }
        BodyKind::Ellipsoid { .. } if n <= 3 => {
            Some(MeasureEstimate::quadrature(sphere_average(b, |r| psi_n(r, n))))
        }
        _ => None,
    }
}

/// `γₙ(K)`.
pub fn measure(body: &Body, budget: SamplingBudget) -> Result<MeasureEstimate> {
    if let Some(e) = measure_exact(body) {
        return Ok(e);
    }
    let m = sample_moments(body.dim(), budget, 1, false, |x, out| {
        out[0] = if body.contains_unchecked(x) { 1.0 } else { 0.0 };
    })?;
    let hits = m.sum(0).round() as u64;
    if hits < MIN_HITS {
        return Err(GbmError::InsufficientHits { hits, required: MIN_HITS });
    }
    let p = m.mean(0);
    let n = budget.samples as f64;
    Ok(MeasureEstimate {
        value: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        method: Method::MonteCarlo,
        samples: Some(budget.samples),
        seed: Some(budget.seed),
        outer_biased: body.is_approximate(),
    })
}

/// `∫_K |x|² dγₙ` when a closed form or quadrature applies.
pub fn second_moment_exact(body: &Body) -> Option<MeasureEstimate> {
    let b = body.effective();
    let n = b.dim();
    match b.kind() {
        BodyKind::Ball { radius } => Some(MeasureEstimate::exact(ball_second_moment(*radius, n))),
        BodyKind::Box { half_widths } => {
            let m0: Vec<f64> = half_widths.iter().map(|&a| interval_mass(a)).collect();
            let mut total = 0.0;
            for (i, &a) in half_widths.iter().enumerate() {
                let others: f64 =
                    m0.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).product();
                total += interval_second(a) * others;
            }
            Some(MeasureEstimate::exact(total))
        }
        BodyKind::Halfspace { offset, .. } => {
            let a = *offset;
            Some(MeasureEstimate::exact(n as f64 * phi(a) - a * normal_pdf(a)))
        }
        BodyKind::Slab { half_width, cap_radius, .. } => {
            let (m0, m2) = (interval_mass(*half_width), interval_second(*half_width));
            let (p0, p2) = match cap_radius {
                Some(c) if n > 1 => (psi_n(*c, n - 1), ball_second_moment(*c, n - 1)),
                _ => (1.0, (n - 1) as f64),
            };
            Some(MeasureEstimate::exact(m2 * p0 + m0 * p2))
        }
        BodyKind::Ellipsoid { .. } if n <= 3 => {
            Some(MeasureEstimate::quadrature(sphere_average(b, |r| ball_second_moment(r, n))))
        }
        _ => None,
    }
}

/// Unnormalised second moment `∫_K |x|² dγₙ`.
pub fn second_moment(body: &Body, budget: SamplingBudget) -> Result<MeasureEstimate> {
    if let Some(e) = second_moment_exact(body) {
        return Ok(e);
    }
    let m = sample_moments(body.dim(), budget, 2, true, |x, out| {
        if body.contains_unchecked(x) {
            out[0] = 1.0;
            out[1] = x.iter().map(|a| a * a).sum();
        } else {
            out[0] = 0.0;
            out[1] = 0.0;
        }
    })?;
    check_hits(&m)?;
    Ok(MeasureEstimate {
        value: m.mean(1),
        std_error: m.se_of_mean(1),
        method: Method::MonteCarlo,
        samples: Some(budget.samples),
        seed: Some(budget.seed),
        outer_biased: body.is_approximate(),
    })
}

fn check_hits(m: &Moments) -> Result<()> {
    let hits = m.sum(0).round() as u64;
    if hits < MIN_HITS {
        return Err(GbmError::InsufficientHits { hits, required: MIN_HITS });
    }
    Ok(())
}

/// Normalised second moment `∫_K |x|² dγ_K = ∫_K |x|² dγₙ / γₙ(K)`, ratio estimator.
pub fn normalized_second_moment(body: &Body, budget: SamplingBudget) -> Result<MeasureEstimate> {
    if let (Some(m2), Some(m0)) = (second_moment_exact(body), measure_exact(body)) {
        let method = if m2.method == Method::Exact && m0.method == Method::Exact {
            Method::Exact
        } else {
            Method::Quadrature
        };
        return Ok(MeasureEstimate { method, ..MeasureEstimate::exact(m2.value / m0.value) });
    }
    let m = sample_moments(body.dim(), budget, 2, true, |x, out| {
        if body.contains_unchecked(x) {
            out[0] = 1.0;
            out[1] = x.iter().map(|a| a * a).sum();
        } else {
            out[0] = 0.0;
            out[1] = 0.0;
        }
    })?;
    check_hits(&m)?;
    let (p, s) = (m.mean(0), m.mean(1));
    let r = s / p;
    // Delta method for a ratio of means.
    let var = (m.cov_of_means(1, 1) - 2.0 * r * m.cov_of_means(0, 1)
        + r * r * m.cov_of_means(0, 0))
        / (p * p);
    Ok(MeasureEstimate {
        value: r,
        std_error: var.max(0.0).sqrt(),
        method: Method::MonteCarlo,
        samples: Some(budget.samples),
        seed: Some(budget.seed),
        outer_biased: body.is_approximate(),
    })
}

/// Average of `g(ρ_K(θ))` over the uniform probability on the sphere, for `n ∈ {2, 3}`.
fn sphere_average(body: &Body, g: impl Fn(f64) -> f64) -> f64 {
    let n = body.dim();
    match n {
        1 => {
            let r = body.radial_unchecked(&[1.0]);
            let l = body.radial_unchecked(&[-1.0]);
            0.5 * (g(r) + g(l))
        }
        2 => {
            let m = 1024;
            (0..m)
                .map(|j| {
                    let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
                    g(body.radial_unchecked(&[t.cos(), t.sin()]))
                })
                .sum::<f64>()
                / m as f64
        }
        3 => {
            let gl = GaussLegendre::new(96);
            let m = 256;
            let mut acc = 0.0;
            for (z, w) in gl.nodes.iter().zip(&gl.weights) {
                let s = (1.0 - z * z).sqrt();
                let mut ring = 0.0;
                for j in 0..m {
                    let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
                    ring += g(body.radial_unchecked(&[s * t.cos(), s * t.sin(), *z]));
                }
                acc += w * ring / m as f64;
            }
            0.5 * acc
        }
        _ => unreachable!("sphere quadrature is only used for n ≤ 3"),
    }
}

/// `Ξ(r) = γₙ(rM)` on a grid, with common random numbers across grid points.
pub fn xi_profile(m: &Body, r_grid: &[f64], budget: SamplingBudget) -> Result<Vec<(f64, MeasureEstimate)>> {
    if !m.flags().star_shaped {
        return Err(GbmError::invalid("dilate profile requires a star-shaped body"));
    }
    let dilates: Vec<Body> = r_grid.iter().map(|&r| Body::dilate(r, m)).collect::<Result<_>>()?;
    if let Some(exact) = dilates.iter().map(measure_exact).collect::<Option<Vec<_>>>() {
        return Ok(r_grid.iter().cloned().zip(exact).collect());
    }
    // x ∈ rM iff |x| ≤ r ρ_M(x/|x|): one radial evaluation serves the whole grid.
    let k = r_grid.len();
    let mom = sample_moments(m.dim(), budget, k, false, |x, out| {
        let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rho = if nx == 0.0 {
            f64::INFINITY
        } else {
            let theta: Vec<f64> = x.iter().map(|a| a / nx).collect();
            m.radial_unchecked(&theta)
        };
        for (o, &r) in out.iter_mut().zip(r_grid) {
            *o = if nx <= r * rho { 1.0 } else { 0.0 };
        }
    })?;
    let n = budget.samples as f64;
    Ok(r_grid
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let p = mom.mean(i);
            (
                r,
                MeasureEstimate {
                    value: p,
                    std_error: (p * (1.0 - p) / n).sqrt(),
                    method: Method::MonteCarlo,
                    samples: Some(budget.samples),
                    seed: Some(budget.seed),
                    outer_biased: m.is_approximate(),
                },
            )
        })
        .collect())
}
