//! Single-body lemmas and auxiliary inequalities.

use super::{CheckKind, CheckResult, Joint};
use crate::bodies::Body;
use crate::error::{GbmError, Result};
use crate::gaussmeasure::{
    ball_second_moment, measure_exact, psi_n, psi_n_inv, sample_moments, second_moment_exact,
    xi_profile, SamplingBudget, MIN_HITS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

fn require_star(body: &Body) -> Result<()> {
    if !body.flags().star_shaped {
        return Err(GbmError::invalid("this lemma needs a star-shaped body"));
    }
    Ok(())
}

/// Samples `k` integrands that vanish outside `body`; slot 0 is the indicator.
fn restricted_moments<F>(body: &Body, budget: SamplingBudget, k: usize, f: F) -> Result<Joint>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let mom = sample_moments(body.dim(), budget, k, true, |x, out| {
        if body.contains_unchecked(x) {
            out[0] = 1.0;
            f(x, &mut out[1..]);
        } else {
            out.iter_mut().for_each(|o| *o = 0.0);
        }
    })?;
    let hits = mom.sum(0).round() as u64;
    if hits < MIN_HITS {
        return Err(GbmError::InsufficientHits { hits, required: MIN_HITS });
    }
    let values = (0..k).map(|i| mom.mean(i)).collect();
    let cov = (0..k).map(|i| (0..k).map(|j| mom.cov_of_means(i, j)).collect()).collect();
    Ok(Joint { values, cov, exact: false, outer_biased: body.is_approximate() })
}

fn body_inputs(body: &Body, budget: SamplingBudget) -> serde_json::Value {
    serde_json::json!({ "body": body, "samples": budget.samples, "seed": budget.seed })
}

/// `∫_K |x|² dγ ≥ ∫_{ρB} |x|² dγ` with `γ(ρB) = γ(K)`.
pub fn check_ball_second_moment(k: &Body, budget: SamplingBudget) -> Result<CheckResult> {
    require_star(k)?;
    let n = k.dim();
    let joint = match (measure_exact(k), second_moment_exact(k)) {
        (Some(p), Some(s)) => Joint::from_exact(vec![p.value, s.value]),
        _ => restricted_moments(k, budget, 2, |x, out| out[0] = x.iter().map(|a| a * a).sum())?,
    };
    Ok(joint.result(
        CheckKind::BallSecondMoment,
        "ball-second-moment",
        body_inputs(k, budget),
        |v| v[1],
        |v| ball_second_moment(psi_n_inv(v[0], n), n),
    ))
}

/// `γ(tA) ≥ Ψₙ(tρ)` with `Ψₙ(ρ) = γ(A)`, one result per `t ∈ (0, 1]`.
pub fn check_dilate_lemma(a: &Body, t_grid: &[f64], budget: SamplingBudget) -> Result<Vec<CheckResult>> {
    require_star(a)?;
    if t_grid.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(GbmError::invalid("dilation factors must lie in (0, 1]"));
    }
    let n = a.dim();
    // Slot 0 is A itself; slots 1.. the dilates, sampled on shared points.
    let mut r_grid = vec![1.0];
    r_grid.extend_from_slice(t_grid);
    let exact: Option<Vec<f64>> = r_grid
        .iter()
        .map(|&t| Body::dilate(t, a).ok().and_then(|d| measure_exact(&d)).map(|e| e.value))
        .collect();
    let joint = if let Some(values) = exact {
        Joint::from_exact(values)
    } else {
        let m = r_grid.len();
        let k = m + 1;
        let rg = r_grid.clone();
        let j = restricted_moments(&Body::ball(n, f64::INFINITY)?, budget, k, |x, out| {
            let mut y = [0.0; crate::bodies::MAX_DIM];
            for (o, &r) in out.iter_mut().zip(&rg) {
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi = xi / r;
                }
                *o = if a.contains_unchecked(&y[..n]) { 1.0 } else { 0.0 };
            }
        })?;
        // Drop the all-space indicator in slot 0.
        Joint {
            values: j.values[1..].to_vec(),
            cov: j.cov[1..].iter().map(|row| row[1..].to_vec()).collect(),
            exact: false,
            outer_biased: a.is_approximate(),
        }
    };
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let slot = i + 1;
            let mut inputs = body_inputs(a, budget);
            inputs["t"] = serde_json::json!(t);
            joint.result(
                CheckKind::DilateLemma,
                &format!("dilate-t{t}"),
                inputs,
                |v| v[slot],
                |v| psi_n(t * psi_n_inv(v[0], n), n),
            )
        })
        .collect())
}

/// `Var_{γ_K}(|x|²) ≤ ½∫|∇|x|²|² dγ_K = 2∫|x|² dγ_K`.
pub fn check_b_variance(k: &Body, budget: SamplingBudget) -> Result<CheckResult> {
    let joint = restricted_moments(k, budget, 3, |x, out| {
        let s: f64 = x.iter().map(|a| a * a).sum();
        out[0] = s;
        out[1] = s * s;
    })?;
    // Written as 2∫|x|² − Var ≥ 0 so that a positive margin means the bound holds.
    Ok(joint.result(
        CheckKind::BVariance,
        "b-variance",
        body_inputs(k, budget),
        |v| 2.0 * v[1] / v[0],
        |v| v[2] / v[0] - (v[1] / v[0]).powi(2),
    ))
}

/// `f(x) = Σ aᵢxᵢ + Σ_{i≤j≤l} c_{ijl} xᵢxⱼx_l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OddCubic {
    pub linear: Vec<f64>,
    pub cubic: Vec<([usize; 3], f64)>,
}

impl OddCubic {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v: f64 = self.linear.iter().zip(x).map(|(a, t)| a * t).sum();
        for ([i, j, l], c) in &self.cubic {
            v += c * x[*i] * x[*j] * x[*l];
        }
        v
    }

    pub fn grad(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.linear);
        for ([i, j, l], c) in &self.cubic {
            out[*i] += c * x[*j] * x[*l];
            out[*j] += c * x[*i] * x[*l];
            out[*l] += c * x[*i] * x[*j];
        }
    }
}

/// `count` odd cubics with standard normal coefficients (cubic part scaled by ½).
pub fn odd_cubic_family(dim: usize, count: usize, seed: u64) -> Vec<OddCubic> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let linear: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let mut cubic = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                for l in j..dim {
                    let c: f64 = rng.sample(StandardNormal);
                    cubic.push(([i, j, l], 0.5 * c));
                }
            }
        }
        out.push(OddCubic { linear, cubic });
    }
    out
}

/// `Var_{γ_K}(f) ≤ ∫|∇f|² dγ_K` for each member of the family, on shared samples.
pub fn check_brascamp_lieb(k: &Body, family: &[OddCubic], budget: SamplingBudget) -> Result<Vec<CheckResult>> {
    let n = k.dim();
    if family.iter().any(|f| f.linear.len() != n) {
        return Err(GbmError::DimensionMismatch { expected: n, got: family[0].linear.len() });
    }
    let m = family.len();
    let joint = restricted_moments(k, budget, 1 + 3 * m, |x, out| {
        let mut g = [0.0; crate::bodies::MAX_DIM];
        for (i, f) in family.iter().enumerate() {
            let v = f.eval(x);
            f.grad(x, &mut g[..n]);
            out[3 * i] = v;
            out[3 * i + 1] = v * v;
            out[3 * i + 2] = g[..n].iter().map(|a| a * a).sum();
        }
    })?;
    Ok((0..m)
        .map(|i| {
            let (a, b, c) = (1 + 3 * i, 2 + 3 * i, 3 + 3 * i);
            let mut inputs = body_inputs(k, budget);
            inputs["function"] = serde_json::to_value(&family[i]).unwrap_or_default();
            joint.result(
                CheckKind::BrascampLieb,
                &format!("brascamp-lieb-f{i}"),
                inputs,
                |v| v[c] / v[0],
                |v| v[b] / v[0] - (v[a] / v[0]).powi(2),
            )
        })
        .collect())
}

/// Shape of `s ↦ Ξ⁻¹(Ψₙ(s))` for `Ξ(r) = γ(rM)`, read off its inverse
/// `g = Ψₙ⁻¹ ∘ Ξ`: the former is concave exactly where `g` is convex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiProfileReport {
    pub body: Body,
    pub r: Vec<f64>,
    pub xi: Vec<f64>,
    /// `Ψₙ⁻¹(Ξ(r))`.
    pub g: Vec<f64>,
    /// Second differences of `g` at interior grid points, divided by `Δr²`.
    pub second_differences: Vec<f64>,
    /// Per interior point, three standard errors of the second difference under the
    /// nested-set covariance (zero when exact), plus a round-off allowance.
    pub noise: Vec<f64>,
    pub exact: bool,
    /// Every second difference is within noise of zero.
    pub affine: bool,
    /// Radii where `g` is significantly concave, i.e. `Ξ⁻¹∘Ψ` fails to be concave.
    pub concavity_violations: Vec<f64>,
    pub summary: String,
}

/// Descriptive probe; `r_grid` must be uniform and positive.
pub fn check_xi_profile(m: &Body, r_grid: &[f64], budget: SamplingBudget) -> Result<XiProfileReport> {
    if r_grid.len() < 3 {
        return Err(GbmError::invalid("need at least three radii"));
    }
    let dr = r_grid[1] - r_grid[0];
    if !(r_grid[0] > 0.0 && dr > 0.0)
        || r_grid.windows(2).any(|w| ((w[1] - w[0]) - dr).abs() > 1e-9 * dr.max(1.0))
    {
        return Err(GbmError::invalid("radius grid must be uniform, increasing and positive"));
    }
    let n = m.dim();
    let prof = xi_profile(m, r_grid, budget)?;
    let exact = prof.iter().all(|(_, e)| e.is_exact());
    let xi: Vec<f64> = prof.iter().map(|(_, e)| e.value).collect();
    let g: Vec<f64> = xi.iter().map(|&p| psi_n_inv(p, n)).collect();
    // Dilates of a star-shaped set are nested, so on shared samples
    // Cov(p̂ᵢ, p̂ⱼ) = (p_min(i,j) − pᵢpⱼ)/N; |dg/dp| = 1/Ψₙ′(g).
    let dgdp: Vec<f64> = g.iter().map(|&gv| 1.0 / crate::gaussmeasure::psi_n_prime(gv, n).max(1e-300)).collect();
    let samples = if exact { f64::INFINITY } else { budget.samples as f64 };
    let mut second_differences = Vec::new();
    let mut noise = Vec::new();
    for i in 1..g.len() - 1 {
        second_differences.push((g[i + 1] - 2.0 * g[i] + g[i - 1]) / (dr * dr));
        let idx = [i - 1, i, i + 1];
        let c = [1.0, -2.0, 1.0];
        let mut var = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let (ia, ib) = (idx[a], idx[b]);
                let cov = (xi[ia.min(ib)] - xi[ia] * xi[ib]) / samples;
                var += c[a] * c[b] * dgdp[ia] * dgdp[ib] * cov;
            }
        }
        noise.push(3.0 * var.max(0.0).sqrt() / (dr * dr) + 1e-7 / (dr * dr));
    }
    let affine = second_differences.iter().zip(&noise).all(|(d, s)| d.abs() <= *s);
    let concavity_violations: Vec<f64> = second_differences
        .iter()
        .zip(&noise)
        .enumerate()
        .filter(|(_, (d, s))| **d < -**s)
        .map(|(i, _)| r_grid[i + 1])
        .collect();
    let summary = if affine {
        "profile is affine to within noise: a dilated-ball profile".to_string()
    } else if concavity_violations.is_empty() {
        "profile is convex but not affine; Ξ⁻¹∘Ψ stays concave on this grid".to_string()
    } else {
        format!(
            "Ξ⁻¹∘Ψ fails to be concave at {} of {} interior radii (first at r = {})",
            concavity_violations.len(),
            second_differences.len(),
            concavity_violations[0]
        )
    };
    Ok(XiProfileReport {
        body: m.clone(),
        r: r_grid.to_vec(),
        xi,
        g,
        second_differences,
        noise,
        exact,
        affine,
        concavity_violations,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_gradient_matches_differences() {
        let f = &odd_cubic_family(3, 1, 5)[0];
        let x = [0.3, -0.7, 1.1];
        let mut g = [0.0; 3];
        f.grad(&x, &mut g);
        for i in 0..3 {
            let mut a = x;
            let mut b = x;
            a[i] += 1e-6;
            b[i] -= 1e-6;
            assert!(((f.eval(&a) - f.eval(&b)) / 2e-6 - g[i]).abs() < 1e-6);
        }
        assert!((f.eval(&[-0.3, 0.7, -1.1]) + f.eval(&x)).abs() < 1e-12);
    }

    #[test]
    fn ball_is_the_equality_case() {
        let r = check_ball_second_moment(&Body::ball(3, 1.3).unwrap(), SamplingBudget::new(1, 0)).unwrap();
        assert!(r.exact);
        assert!(r.margin.abs() < 1e-12, "{}", r.margin);
    }
}
