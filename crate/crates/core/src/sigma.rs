//! Tabulation of the refinement function `σₙ`.
//!
//! Along `y = Ψₙ(r)` the defining relation `1 + σ″(y)y/σ′(y) = 2/n − rΨₙ′(r)/(n²Ψₙ(r))`
//! becomes a first-order equation for `L(r) = log σ′(Ψₙ(r))`:
//!
//! ```text
//! L′(r) = A(r) Ψₙ′(r)/Ψₙ(r),    A(r) = −(n−1)/n + P(n/2+1, r²/2) / (n P(n/2, r²/2)),
//! ```
//!
//! using `nΨₙ − rΨₙ′ = n P(n/2+1, r²/2)`. Then `d/dr σ(Ψₙ(r)) = e^{L(r)} Ψₙ′(r)`.
//! Both integrals are evaluated cell by cell with Gauss–Legendre rules starting
//! from the anchor `r = 1`, where `σ = 0` and `σ′ = 1`. Per-cell increments are
//! kept so differences between nearby nodes stay accurate where `Ψₙ ≈ 1`.

use crate::error::{GbmError, Result};
use crate::gaussmeasure::special::{gamma_p, psi_n, psi_n_complement, psi_n_complement_inv, psi_n_inv, psi_n_prime};
use crate::numeric::{fd_first_derivative_weights, GaussLegendre, HermiteCell};
use serde::Serialize;
use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};

pub const DEFAULT_R_MAX: f64 = 6.0;
pub const DEFAULT_NODES: usize = 4096;
const R_MIN: f64 = 1e-4;
const GEOMETRIC_END: f64 = 0.5;
const ANCHOR: f64 = 1.0;

/// `A(r)`: the coefficient in `d/dr log σ′(Ψₙ(r)) = A(r)Ψₙ′/Ψₙ`.
pub fn a_coefficient(n: usize, r: f64) -> f64 {
    -((n - 1) as f64) / n as f64 + convexity_margin(n, r)
}

/// `A(r) + (n−1)/n = P(n/2+1, r²/2) / (n P(n/2, r²/2))`, the slack in the
/// power-convexity condition `σ″(yⁿ)yⁿ/σ′(yⁿ) ≥ −(n−1)/n`.
pub fn convexity_margin(n: usize, r: f64) -> f64 {
    let h = 0.5 * n as f64;
    let x = 0.5 * r * r;
    if r < 1e-3 {
        // Leading terms of the series ratio, avoiding 0/0 underflow at tiny r.
        let ratio = (x / (h + 1.0)) * (1.0 - x / ((h + 1.0) * (h + 2.0)));
        return ratio / n as f64;
    }
    gamma_p(h + 1.0, x) / (n as f64 * gamma_p(h, x))
}

fn log_derivative_rate(n: usize, r: f64) -> f64 {
    a_coefficient(n, r) * psi_n_prime(r, n) / psi_n(r, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Normalization {
    pub anchor_r: f64,
    /// `σ(Ψₙ(1))`.
    pub sigma_at_anchor: f64,
    /// `σ′(Ψₙ(1))`.
    pub sigma_prime_at_anchor: f64,
}

#[derive(Debug)]
pub struct SigmaTable {
    pub n: usize,
    pub r_grid: Vec<f64>,
    pub psi: Vec<f64>,
    /// `1 − Ψₙ(r)` per node.
    pub psi_complement: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_prime: Vec<f64>,
    pub normalization: Normalization,
    anchor_index: usize,
    /// `log σ′` for the anchor normalisation (before affine rescaling).
    log_sp: Vec<f64>,
    /// Per-cell increments of the normalised σ and of `log σ′`.
    d_sigma: Vec<f64>,
    d_log_sp: Vec<f64>,
    scale: f64,
    warned: AtomicBool,
}

impl Clone for SigmaTable {
    fn clone(&self) -> Self {
        SigmaTable {
            n: self.n,
            r_grid: self.r_grid.clone(),
            psi: self.psi.clone(),
            psi_complement: self.psi_complement.clone(),
            sigma: self.sigma.clone(),
            sigma_prime: self.sigma_prime.clone(),
            normalization: self.normalization,
            anchor_index: self.anchor_index,
            log_sp: self.log_sp.clone(),
            d_sigma: self.d_sigma.clone(),
            d_log_sp: self.d_log_sp.clone(),
            scale: self.scale,
            warned: AtomicBool::new(false),
        }
    }
}

fn grid(r_max: f64, nodes: usize) -> Vec<f64> {
    let geo = nodes / 4;
    let uni = nodes - geo;
    let mut r = Vec::with_capacity(nodes);
    let ratio = (GEOMETRIC_END / R_MIN).ln() / geo as f64;
    for i in 0..geo {
        r.push(R_MIN * (ratio * i as f64).exp());
    }
    // Two nearly equal uniform pieces so that the anchor is a node.
    let cells = uni - 1;
    let c1 = (((cells as f64) * (ANCHOR - GEOMETRIC_END) / (r_max - GEOMETRIC_END)).round() as usize)
        .clamp(1, cells - 1);
    let c2 = cells - c1;
    for j in 0..=c1 {
        r.push(GEOMETRIC_END + (ANCHOR - GEOMETRIC_END) * j as f64 / c1 as f64);
    }
    for j in 1..=c2 {
        r.push(ANCHOR + (r_max - ANCHOR) * j as f64 / c2 as f64);
    }
    r
}

impl SigmaTable {
    /// Builds the table on `nodes` radii in `[10⁻⁴, r_max]`.
    pub fn build(n: usize, r_max: f64, nodes: usize) -> Result<SigmaTable> {
        if n == 0 {
            return Err(GbmError::invalid("sigma table needs n ≥ 1"));
        }
        if !(3.0..=8.0).contains(&r_max) {
            return Err(GbmError::invalid(format!("r_max must lie in [3, 8], got {r_max}")));
        }
        if nodes < 1000 {
            return Err(GbmError::invalid(format!("need at least 1000 nodes, got {nodes}")));
        }
        let r = grid(r_max, nodes);
        let m = r.len();
        let anchor_index = r.iter().position(|&v| v == ANCHOR).expect("anchor is a grid node");
        let gl = GaussLegendre::new(10);

        // Cell increments of L, and of σ given L at the cell's left end.
        let mut d_log_sp = vec![0.0; m - 1];
        for i in 0..m - 1 {
            d_log_sp[i] = gl.integrate(r[i], r[i + 1], |s| log_derivative_rate(n, s));
        }
        let mut log_sp = vec![0.0; m];
        for i in anchor_index + 1..m {
            log_sp[i] = log_sp[i - 1] + d_log_sp[i - 1];
        }
        for i in (0..anchor_index).rev() {
            log_sp[i] = log_sp[i + 1] - d_log_sp[i];
        }
        let mut d_sigma = vec![0.0; m - 1];
        for i in 0..m - 1 {
            let (a, l0) = (r[i], log_sp[i]);
            d_sigma[i] = gl.integrate(a, r[i + 1], |s| {
                let l = l0 + gl.integrate(a, s, |t| log_derivative_rate(n, t));
                l.exp() * psi_n_prime(s, n)
            });
        }
        let mut sigma = vec![0.0; m];
        for i in anchor_index + 1..m {
            sigma[i] = sigma[i - 1] + d_sigma[i - 1];
        }
        for i in (0..anchor_index).rev() {
            sigma[i] = sigma[i + 1] - d_sigma[i];
        }
        if let Some(i) = d_sigma.iter().position(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(GbmError::Integration(format!(
                "sigma is not strictly increasing on cell {i} (r = {} .. {}), increment {}",
                r[i],
                r[i + 1],
                d_sigma[i]
            )));
        }
        let psi: Vec<f64> = r.iter().map(|&v| psi_n(v, n)).collect();
        let psi_complement: Vec<f64> = r.iter().map(|&v| psi_n_complement(v, n)).collect();
        let sigma_prime: Vec<f64> = log_sp.iter().map(|l| l.exp()).collect();
        Ok(SigmaTable {
            n,
            r_grid: r,
            psi,
            psi_complement,
            sigma,
            sigma_prime,
            normalization: Normalization {
                anchor_r: ANCHOR,
                sigma_at_anchor: 0.0,
                sigma_prime_at_anchor: 1.0,
            },
            anchor_index,
            log_sp,
            d_sigma,
            d_log_sp,
            scale: 1.0,
            warned: AtomicBool::new(false),
        })
    }

    pub fn with_defaults(n: usize) -> Result<SigmaTable> {
        SigmaTable::build(n, DEFAULT_R_MAX, DEFAULT_NODES)
    }

    /// The table of `aσ + b`, `a > 0`.
    pub fn affine(&self, a: f64, b: f64) -> Result<SigmaTable> {
        if !(a > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(GbmError::invalid("affine renormalisation needs a > 0 and finite b"));
        }
        let mut t = self.clone();
        t.sigma.iter_mut().for_each(|s| *s = a * *s + b);
        t.sigma_prime.iter_mut().for_each(|s| *s *= a);
        t.d_sigma.iter_mut().for_each(|s| *s *= a);
        t.scale *= a;
        t.normalization.sigma_at_anchor = t.sigma[t.anchor_index];
        t.normalization.sigma_prime_at_anchor = t.sigma_prime[t.anchor_index];
        Ok(t)
    }

    pub fn anchor_index(&self) -> usize {
        self.anchor_index
    }

    pub fn r_min(&self) -> f64 {
        self.r_grid[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.r_grid.last().unwrap()
    }

    fn cell_of(&self, r: f64) -> usize {
        match self.r_grid.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(self.r_grid.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.r_grid.len() - 2),
        }
    }

    fn radius_of(&self, y: f64) -> f64 {
        if y > 0.5 {
            psi_n_complement_inv(1.0 - y, self.n)
        } else {
            psi_n_inv(y, self.n)
        }
    }

    fn warn_clamp(&self, y: f64) {
        if !self.warned.swap(true, Ordering::Relaxed) {
            log::warn!(
                "sigma table (n = {}) evaluated at y = {y} beyond r_max = {}; clamping",
                self.n,
                self.r_max()
            );
        }
    }

    fn sigma_cell(&self, i: usize) -> HermiteCell {
        let (r0, r1) = (self.r_grid[i], self.r_grid[i + 1]);
        HermiteCell {
            x0: r0,
            x1: r1,
            y0: 0.0,
            y1: self.d_sigma[i],
            d0: self.sigma_prime[i] * psi_n_prime(r0, self.n),
            d1: self.sigma_prime[i + 1] * psi_n_prime(r1, self.n),
        }
        .monotone()
    }

    fn log_sp_cell(&self, i: usize) -> HermiteCell {
        let (r0, r1) = (self.r_grid[i], self.r_grid[i + 1]);
        HermiteCell {
            x0: r0,
            x1: r1,
            y0: self.log_sp[i],
            y1: self.log_sp[i] + self.d_log_sp[i],
            d0: log_derivative_rate(self.n, r0),
            d1: log_derivative_rate(self.n, r1),
        }
    }

    /// `σ(Ψₙ(r))` as a function of the radius.
    pub fn sigma_at_radius(&self, r: f64) -> f64 {
        if r < self.r_min() {
            // Below the grid σ′(y) ∝ y^{−(n−1)/n} to within O(r²); integrate that power law.
            let n = self.n as f64;
            let y0 = self.psi[0];
            let y = psi_n(r, self.n);
            return self.sigma[0] + self.sigma_prime[0] * y0 * n * ((y / y0).powf(1.0 / n) - 1.0);
        }
        let r = if r > self.r_max() { self.r_max() } else { r };
        let i = self.cell_of(r);
        self.sigma[i] + self.sigma_cell(i).eval(r)
    }

    pub fn sigma_prime_at_radius(&self, r: f64) -> f64 {
        if r < self.r_min() {
            let y0 = self.psi[0];
            let y = psi_n(r, self.n);
            return self.sigma_prime[0] * (y / y0).powf(-((self.n - 1) as f64) / self.n as f64);
        }
        let r = if r > self.r_max() { self.r_max() } else { r };
        let i = self.cell_of(r);
        self.scale * self.log_sp_cell(i).eval(r).exp()
    }

    /// `σₙ(y)` by monotone interpolation; clamps above the table with a warning.
    pub fn sigma_eval(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return self.sigma_at_radius(0.0);
        }
        if y > *self.psi.last().unwrap() {
            self.warn_clamp(y);
            return *self.sigma.last().unwrap();
        }
        self.sigma_at_radius(self.radius_of(y))
    }

    pub fn sigma_prime_eval(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return f64::INFINITY;
        }
        if y > *self.psi.last().unwrap() {
            self.warn_clamp(y);
            return *self.sigma_prime.last().unwrap();
        }
        self.sigma_prime_at_radius(self.radius_of(y))
    }

    /// `τₙ(x) = σₙ⁻¹(x)^{1/n}`.
    pub fn tau_eval(&self, x: f64) -> f64 {
        let inv_n = 1.0 / self.n as f64;
        if x >= *self.sigma.last().unwrap() {
            return self.psi.last().unwrap().powf(inv_n);
        }
        if x <= self.sigma_at_radius(0.0) {
            return 0.0;
        }
        let (mut lo, mut hi) = if x < self.sigma[0] {
            (0.0, self.r_min())
        } else {
            let i = self.sigma.partition_point(|&v| v < x);
            if self.sigma[i] == x {
                return self.psi[i].powf(inv_n);
            }
            (self.r_grid[i - 1], self.r_grid[i])
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.sigma_at_radius(mid) < x {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        psi_n(0.5 * (lo + hi), self.n).powf(inv_n)
    }

    /// `|1 + σ″Ψ/σ′ − (2/n − rΨ′/(n²Ψ))|` per node, with `σ″Ψ/σ′ = dL/d log Ψ`
    /// taken by 9-point finite differences in `log r` on the stored data.
    pub fn ode_residuals(&self) -> Vec<f64> {
        let m = self.r_grid.len();
        let n = self.n;
        let half = 4;
        let t: Vec<f64> = self.r_grid.iter().map(|r| r.ln()).collect();
        (0..m)
            .map(|c| {
                let start = c.saturating_sub(half).min(m - 2 * half - 1);
                let idx: Vec<usize> = (start..start + 2 * half + 1).collect();
                let nodes: Vec<f64> = idx.iter().map(|&j| t[j]).collect();
                let w = fd_first_derivative_weights(t[c], &nodes);
                let mut dl = 0.0;
                let mut dlogpsi = 0.0;
                for (k, &j) in idx.iter().enumerate() {
                    dl += w[k] * self.log_sp_diff(c, j);
                    dlogpsi += w[k] * self.log_psi_diff(c, j);
                }
                let lhs = 1.0 + dl / dlogpsi;
                let r = self.r_grid[c];
                let rhs = 1.0 + a_coefficient(n, r);
                (lhs - rhs).abs()
            })
            .collect()
    }

    /// `L_j − L_c` summed from cell increments.
    fn log_sp_diff(&self, c: usize, j: usize) -> f64 {
        if j >= c {
            self.d_log_sp[c..j].iter().sum()
        } else {
            -self.d_log_sp[j..c].iter().sum::<f64>()
        }
    }

    fn log_psi_diff(&self, c: usize, j: usize) -> f64 {
        let (pc, pj) = (self.psi[c], self.psi[j]);
        if pc < 0.5 {
            pj.ln() - pc.ln()
        } else {
            ((self.psi_complement[c] - self.psi_complement[j]) / pc).ln_1p()
        }
    }

    fn sigma_diff(&self, c: usize, j: usize) -> f64 {
        if j >= c {
            self.d_sigma[c..j].iter().sum()
        } else {
            -self.d_sigma[j..c].iter().sum::<f64>()
        }
    }

    /// Checks `σ″(yⁿ)yⁿ/σ′(yⁿ) ≥ −(n−1)/n` through the analytic margin and
    /// through second divided differences of `y ↦ σ(yⁿ)` on the nodes.
    pub fn certify_pow_convexity(&self) -> ConvexityCertificate {
        let n = self.n;
        let margins: Vec<f64> = self.r_grid.iter().map(|&r| convexity_margin(n, r)).collect();
        let m = self.r_grid.len();
        // y = Ψ^{1/n}; differences via Ψ differences taken on the accurate side.
        let y: Vec<f64> = self.psi.iter().map(|p| p.powf(1.0 / n as f64)).collect();
        let dy = |i: usize| -> f64 {
            let dpsi = if self.psi[i] < 0.5 {
                self.psi[i + 1] - self.psi[i]
            } else {
                self.psi_complement[i] - self.psi_complement[i + 1]
            };
            let (a, b) = (y[i + 1], y[i]);
            let mut denom = 0.0;
            for k in 0..n {
                denom += a.powi(k as i32) * b.powi((n - 1 - k) as i32);
            }
            dpsi / denom
        };
        let mut second = vec![0.0; m];
        for i in 1..m - 1 {
            let (h0, h1) = (dy(i - 1), dy(i));
            let s0 = self.sigma_diff(i - 1, i) / h0;
            let s1 = self.sigma_diff(i, i + 1) / h1;
            second[i] = 2.0 * (s1 - s0) / (h0 + h1);
        }
        let interior: Vec<usize> = (1..m - 1).collect();
        let min_second = interior.iter().map(|&i| second[i]).fold(f64::INFINITY, f64::min);
        let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        let strict_min = self
            .r_grid
            .iter()
            .zip(&margins)
            .filter(|(r, _)| (0.1..=3.0).contains(*r))
            .map(|(_, m)| *m)
            .fold(f64::INFINITY, f64::min);
        ConvexityCertificate {
            n,
            margins,
            second_differences: second,
            min_margin,
            min_margin_on_01_3: strict_min,
            min_second_difference: min_second,
            passed: min_margin >= 0.0 && min_second >= -1e-9 && strict_min > 1e-6,
        }
    }

    /// Writes `r,psi,sigma,sigma_prime` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| GbmError::invalid(format!("csv output failed: {e}"));
        wr.write_record(["r", "psi", "sigma", "sigma_prime"]).map_err(io)?;
        for i in 0..self.r_grid.len() {
            wr.write_record(&[
                format!("{:e}", self.r_grid[i]),
                format!("{:e}", self.psi[i]),
                format!("{:e}", self.sigma[i]),
                format!("{:e}", self.sigma_prime[i]),
            ])
            .map_err(io)?;
        }
        wr.flush().map_err(|e| GbmError::invalid(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityCertificate {
    pub n: usize,
    pub margins: Vec<f64>,
    pub second_differences: Vec<f64>,
    pub min_margin: f64,
    pub min_margin_on_01_3: f64,
    pub min_second_difference: f64,
    pub passed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_normalisation_is_exact() {
        let t = SigmaTable::build(3, 6.0, 1200).unwrap();
        let a = t.anchor_index();
        assert_eq!(t.r_grid[a], 1.0);
        assert_eq!(t.sigma[a], 0.0);
        assert_eq!(t.sigma_prime[a], 1.0);
        assert!(t.sigma.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn small_radius_limit_of_a() {
        for n in 1..=6 {
            let lim = -((n - 1) as f64) / n as f64;
            assert!((a_coefficient(n, 1e-4) - lim).abs() < 1e-8);
            // Expansion A ≈ −(n−1)/n + r²/(n(n+2)).
            let r: f64 = 0.01;
            let approx = lim + r * r / (n * (n + 2)) as f64;
            assert!((a_coefficient(n, r) - approx).abs() < 1e-8);
        }
    }

    #[test]
    fn margin_matches_direct_formula_for_n1() {
        let c1 = (2.0 / std::f64::consts::PI).sqrt();
        for &r in &[0.2, 1.0, 2.5] {
            let direct = 1.0 - c1 * r * (-0.5 * r * r).exp() / psi_n(r, 1);
            assert!((convexity_margin(1, r) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn affine_rescaling() {
        let t = SigmaTable::build(2, 6.0, 1200).unwrap();
        let u = t.affine(2.5, -1.0).unwrap();
        for &y in &[0.01, 0.3, 0.8, 0.999] {
            assert!((u.sigma_eval(y) - (2.5 * t.sigma_eval(y) - 1.0)).abs() < 1e-12);
            assert!((u.sigma_prime_eval(y) - 2.5 * t.sigma_prime_eval(y)).abs() < 1e-9 * u.sigma_prime_eval(y));
        }
        assert!(t.affine(0.0, 1.0).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(SigmaTable::build(2, 2.0, 2000).is_err());
        assert!(SigmaTable::build(2, 6.0, 100).is_err());
        assert!(SigmaTable::build(0, 6.0, 2000).is_err());
    }
}
