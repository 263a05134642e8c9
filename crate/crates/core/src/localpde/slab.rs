//! Truncated-slab experiment: `u = u₀ + v` with `u₀ = −½log(|x|²+n)` and
//! `𝓛v = R`, `v = 0` on the boundary.

use super::functional::{field_derivatives, g_functional};
use super::grid::{GridField, MaskedGrid};
use super::solve::{solve_on_grid, BoundaryData, DEFAULT_TOLERANCE};
use crate::bodies::{Body, BodyKind};
use crate::error::{GbmError, Result};
use crate::gaussmeasure::{
    normal_pdf, psi_n, psi_n_prime, sample_moments, MeasureEstimate, Method, SamplingBudget,
};
use crate::numeric::GaussLegendre;
use serde::{Deserialize, Serialize};

pub const MIN_NODES_ACROSS: usize = 16;

/// `∫ 1/(|x|²+n) dγ_K`: tensor quadrature for balls, boxes and capped slabs, Monte Carlo otherwise.
pub fn kl_lower_bound(body: &Body, budget: SamplingBudget) -> Result<MeasureEstimate> {
    let b = body.effective();
    let n = b.dim();
    let nf = n as f64;
    let gl = GaussLegendre::new(24);
    let cells = 16;
    let integrate = |a: f64, c: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        (0..cells)
            .map(|i| {
                let lo = a + (c - a) * i as f64 / cells as f64;
                let hi = a + (c - a) * (i + 1) as f64 / cells as f64;
                gl.integrate(lo, hi, f)
            })
            .sum()
    };
    match b.kind() {
        BodyKind::Ball { radius } if radius.is_finite() => {
            let num = integrate(0.0, *radius, &|r| psi_n_prime(r, n) / (r * r + nf));
            return Ok(MeasureEstimate::exact(num / psi_n(*radius, n)));
        }
        BodyKind::Slab { half_width, cap_radius: Some(c), .. } if n >= 2 => {
            let (e, c) = (*half_width, *c);
            let num = integrate(-e, e, &|t| {
                normal_pdf(t) * integrate(0.0, c, &|r| psi_n_prime(r, n - 1) / (t * t + r * r + nf))
            });
            let den = integrate(-e, e, &normal_pdf) * psi_n(c, n - 1);
            return Ok(MeasureEstimate::exact(num / den));
        }
        BodyKind::Box { half_widths } if n == 2 => {
            let (a, c) = (half_widths[0], half_widths[1]);
            let num = integrate(-a, a, &|x| {
                normal_pdf(x) * integrate(-c, c, &|y| normal_pdf(y) / (x * x + y * y + nf))
            });
            let den = integrate(-a, a, &normal_pdf) * integrate(-c, c, &normal_pdf);
            return Ok(MeasureEstimate::exact(num / den));
        }
        _ => {}
    }
    let m = sample_moments(n, budget, 2, true, |x, out| {
        if b.contains_unchecked(x) {
            out[0] = 1.0;
            out[1] = 1.0 / (x.iter().map(|v| v * v).sum::<f64>() + nf);
        } else {
            out[0] = 0.0;
            out[1] = 0.0;
        }
    })?;
    let p = m.mean(0);
    if m.sum(0) < crate::gaussmeasure::MIN_HITS as f64 {
        return Err(GbmError::InsufficientHits {
            hits: m.sum(0).round() as u64,
            required: crate::gaussmeasure::MIN_HITS,
        });
    }
    let r = m.mean(1) / p;
    let var = (m.cov_of_means(1, 1) - 2.0 * r * m.cov_of_means(0, 1) + r * r * m.cov_of_means(0, 0))
        / (p * p);
    Ok(MeasureEstimate {
        value: r,
        std_error: var.max(0.0).sqrt(),
        method: Method::MonteCarlo,
        samples: Some(budget.samples),
        seed: Some(budget.seed),
        outer_biased: b.is_approximate(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabReport {
    pub n: usize,
    pub eps: f64,
    pub h: f64,
    pub nodes_across: usize,
    /// `∫|∇v|² dγ_S`.
    pub gradient_energy: f64,
    /// `36 e^{ε²/2} ε²`.
    pub poincare_bound: f64,
    pub poincare_holds: bool,
    /// `(1/n)∫H(|x|²/n) dγ_S` on the grid, `H(t) = 1/(t+1)`.
    pub h_term: f64,
    /// `∫ (1/n)(x·∇v)² + |∇v|² dγ_S`.
    pub v_term: f64,
    /// `𝒢(u₀ + v)` from the definition.
    pub g_value: f64,
    /// `h_term + v_term`.
    pub g_split: f64,
    /// `∫ 1/(|x|²+n) dγ_S` by quadrature.
    pub lower_bound: f64,
    /// `(𝒢 − 1/(2n)) / ε²`.
    pub c_estimate: f64,
    pub solver_iterations: usize,
}

fn u0(n: f64, x: f64, y: f64) -> f64 {
    -0.5 * (x * x + y * y + n).ln()
}

fn forcing(n: f64, x: f64, y: f64) -> f64 {
    let s = x * x + y * y;
    2.0 * n / (s + n) - 2.0 * s / ((s + n) * (s + n))
}

/// Runs the experiment on `𝒮_ε = {|x₁| ≤ ε, |x′| ≤ √(2n)}`.
///
/// The spacing is `2ε/q` with `q` the odd integer at or above `nodes_across`, so
/// the faces `x₁ = ±ε` fall midway between lattice columns.
pub fn slab_experiment(n: usize, eps: f64, nodes_across: usize) -> Result<SlabReport> {
    if n == 3 {
        return Err(GbmError::Unsupported(
            "the slab experiment runs on planar grids only; n = 3 is not implemented".into(),
        ));
    }
    if n != 2 {
        return Err(GbmError::invalid(format!("slab experiment needs n = 2, got {n}")));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(GbmError::invalid(format!("ε = {eps} must lie in (0, 0.5]")));
    }
    if nodes_across < MIN_NODES_ACROSS {
        return Err(GbmError::invalid(format!(
            "{nodes_across} nodes across the slab; at least {MIN_NODES_ACROSS} are needed"
        )));
    }
    let q = nodes_across | 1;
    let h = 2.0 * eps / q as f64;
    let body = Body::truncated_slab(n, eps)?;
    let nf = n as f64;
    let grid = MaskedGrid::new(&body, h)?;
    let sol = solve_on_grid(grid, |x, y| forcing(nf, x, y), BoundaryData::Zero, DEFAULT_TOLERANCE)?;
    let g = &sol.grid;
    let v = sol.field();
    let wts = g.measure_weights();
    let ders = field_derivatives(g, &v);
    let (mut grad, mut vterm, mut hterm) = (0.0, 0.0, 0.0);
    for (idx, &k) in g.interior_nodes().iter().enumerate() {
        let d = ders[idx];
        let (x, y) = g.position(k);
        let g2 = d.gx * d.gx + d.gy * d.gy;
        let xd = x * d.gx + y * d.gy;
        grad += wts[idx] * g2;
        vterm += wts[idx] * (xd * xd / nf + g2);
        hterm += wts[idx] / (x * x + y * y + nf);
    }
    let u = GridField::sample(g, |x, y| u0(nf, x, y)).add(&v);
    let g_value = g_functional(g, &u)?;
    let lower_bound = kl_lower_bound(&body, SamplingBudget::new(1, 0))?.value;
    let poincare_bound = 36.0 * (0.5 * eps * eps).exp() * eps * eps;
    Ok(SlabReport {
        n,
        eps,
        h,
        nodes_across: q,
        gradient_energy: grad,
        poincare_bound,
        poincare_holds: grad <= poincare_bound,
        h_term: hterm,
        v_term: vterm,
        g_value,
        g_split: hterm + vterm,
        lower_bound,
        c_estimate: (g_value - 0.5 / nf) / (eps * eps),
        solver_iterations: sol.iterations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabStudy {
    pub n: usize,
    pub eps: Vec<f64>,
    /// One row of reports per resolution, coarse first.
    pub levels: Vec<Vec<SlabReport>>,
    /// Smallest `C` with `𝒢 ≤ 1/(2n) + Cε²` at every ε, per resolution.
    pub c_bound: Vec<f64>,
    /// Least-squares slope of `𝒢` against `ε²`, per resolution.
    pub c_fit: Vec<f64>,
}

impl SlabStudy {
    /// `max/min` of `c_bound` across resolutions.
    pub fn c_spread(&self) -> f64 {
        let hi = self.c_bound.iter().cloned().fold(f64::MIN, f64::max);
        let lo = self.c_bound.iter().cloned().fold(f64::MAX, f64::min);
        hi / lo
    }
}

pub fn slab_study(n: usize, eps: &[f64], resolutions: &[usize]) -> Result<SlabStudy> {
    use rayon::prelude::*;
    let jobs: Vec<(usize, f64)> =
        resolutions.iter().flat_map(|&r| eps.iter().map(move |&e| (r, e))).collect();
    let flat: Vec<SlabReport> =
        jobs.par_iter().map(|&(r, e)| slab_experiment(n, e, r)).collect::<Result<_>>()?;
    let levels: Vec<Vec<SlabReport>> = flat.chunks(eps.len()).map(|c| c.to_vec()).collect();
    let c_bound = levels
        .iter()
        .map(|row| row.iter().map(|r| r.c_estimate).fold(f64::MIN, f64::max))
        .collect();
    let c_fit = levels
        .iter()
        .map(|row| {
            let xs: Vec<f64> = row.iter().map(|r| r.eps * r.eps).collect();
            let ys: Vec<f64> = row.iter().map(|r| r.g_value).collect();
            let m = xs.len() as f64;
            let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            if sxx > 0.0 {
                sxy / sxx
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(SlabStudy { n, eps: eps.to_vec(), levels, c_bound, c_fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forcing_completes_the_equation() {
        // 𝓛u₀ = 1 − R, checked with centred differences at a few points.
        let n = 2.0;
        let h = 1e-4;
        for &(x, y) in &[(0.1, 0.3), (-0.7, 1.2), (0.02, -1.9)] {
            let f = |a: f64, b: f64| u0(n, a, b);
            let lap = (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f(x, y)) / (h * h);
            let gx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
            let gy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
            let lu = lap - x * gx - y * gy;
            assert!((lu - (1.0 - forcing(n, x, y))).abs() < 1e-5);
        }
    }

    #[test]
    fn rejects_coarse_grids_and_bad_inputs() {
        assert!(slab_experiment(2, 0.1, 8).is_err());
        assert!(slab_experiment(2, 0.7, 32).is_err());
        assert!(matches!(slab_experiment(3, 0.1, 32), Err(GbmError::Unsupported(_))));
    }
}
