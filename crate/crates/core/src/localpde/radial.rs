//! Radial solution of `u″ + ((n−1)/r − r)u′ = 1` with `u(0) = u′(0) = 0`, and
//! the closed-form value of the functional on centred balls.

use crate::error::{GbmError, Result};
use crate::gaussmeasure::{psi_n, psi_n_prime};
use crate::numeric::GaussLegendre;
use serde::{Deserialize, Serialize};

const SERIES_LIMIT: f64 = 12.0;

/// `u′(r) = e^{r²/2} r^{1−n} ∫₀ʳ s^{n−1}e^{−s²/2} ds`, also equal to `Ψₙ(r)/Ψₙ′(r)`.
pub fn radial_derivative(n: usize, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r > SERIES_LIMIT {
        return psi_n(r, n) / psi_n_prime(r, n);
    }
    // Σ_k r^{2k+1} / (n(n+2)···(n+2k)), all terms positive.
    let r2 = r * r;
    let mut term = r / n as f64;
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= r2 / (n as f64 + 2.0 * k);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

/// `u″(r)`, differentiated term by term from the same series.
fn radial_second_derivative(n: usize, r: f64) -> f64 {
    if r > SERIES_LIMIT {
        return 1.0 - ((n as f64 - 1.0) / r - r) * radial_derivative(n, r);
    }
    let r2 = r * r;
    let mut coef = 1.0 / n as f64; // 1/(n···(n+2k))
    let mut pow = 1.0; // r^{2k}
    let mut sum = coef;
    let mut k = 1.0;
    loop {
        coef /= n as f64 + 2.0 * k;
        pow *= r2;
        let t = (2.0 * k + 1.0) * coef * pow;
        sum += t;
        if t < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub n: usize,
    pub rho: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub d2u: Vec<f64>,
    /// `max |u″ + ((n−1)/r − r)u′ − 1|` over grid points with `r > 0`.
    pub ode_residual: f64,
}

pub fn radial_solution(n: usize, rho: f64, r_grid: &[f64]) -> Result<RadialProfile> {
    if n == 0 {
        return Err(GbmError::invalid("dimension must be positive"));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(GbmError::invalid(format!("radius {rho} must be positive")));
    }
    if r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(GbmError::invalid("radial grid must be strictly increasing"));
    }
    if r_grid.iter().any(|&r| !(0.0..=rho).contains(&r)) {
        return Err(GbmError::invalid("radial grid must lie in [0, ρ]"));
    }
    let gl = GaussLegendre::new(10);
    let mut u = Vec::with_capacity(r_grid.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &r in r_grid {
        acc += gl.integrate(prev, r, |s| radial_derivative(n, s));
        u.push(acc);
        prev = r;
    }
    let du: Vec<f64> = r_grid.iter().map(|&r| radial_derivative(n, r)).collect();
    let d2u: Vec<f64> = r_grid.iter().map(|&r| radial_second_derivative(n, r)).collect();
    let mut ode_residual = 0.0f64;
    for i in 0..r_grid.len() {
        let r = r_grid[i];
        if r > 0.0 {
            let res = d2u[i] + ((n as f64 - 1.0) / r - r) * du[i] - 1.0;
            ode_residual = ode_residual.max(res.abs());
        }
    }
    Ok(RadialProfile { n, rho, r: r_grid.to_vec(), u, du, d2u, ode_residual })
}

/// `1 − ((n−1)/ρ − ρ) · ∫₀^ρ r^{n−1}e^{−r²/2}dr / (ρ^{n−1}e^{−ρ²/2})`.
pub fn radial_functional(n: usize, rho: f64) -> f64 {
    1.0 - ((n as f64 - 1.0) / rho - rho) * radial_derivative(n, rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_matches_integral_definition() {
        let gl = GaussLegendre::new(40);
        for n in 1..=6 {
            for &r in &[0.01, 0.5, 1.0, 2.5, 4.0] {
                let integral = gl.integrate(0.0, r, |s| s.powi(n as i32 - 1) * (-0.5 * s * s).exp());
                let oracle = (0.5 * r * r).exp() * r.powi(1 - n as i32) * integral;
                let v = radial_derivative(n, r);
                assert!((v - oracle).abs() < 1e-12 * oracle.max(1.0), "n={n} r={r}");
            }
        }
        assert!((radial_derivative(3, 13.0) - psi_n(13.0, 3) / psi_n_prime(13.0, 3)).abs() < 1e-9);
    }

    #[test]
    fn one_dimensional_form() {
        let rho: f64 = 1.7;
        let gl = GaussLegendre::new(40);
        let direct = 1.0 + rho * (0.5 * rho * rho).exp() * gl.integrate(0.0, rho, |r| (-0.5 * r * r).exp());
        assert!((radial_functional(1, rho) - direct).abs() < 1e-12);
    }
}
