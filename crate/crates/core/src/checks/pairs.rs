//! Checks on a pair `(K, L)` and the combination `M = λK + (1−λ)L`.

use super::{derive_seed, joint_measures, CheckCase, CheckKind, CheckResult, Joint, Verdict};
use crate::bodies::Body;
use crate::error::{GbmError, Result};
use crate::gaussmeasure::{phi_inv, psi_n_inv, SamplingBudget};
use crate::sigma::SigmaTable;
use serde::{Deserialize, Serialize};

/// Tables used by the checks extend far enough that `Ψₙ(r_max)` is 1 to
/// round-off for the dimensions in the corpus.
pub const CHECK_TABLE_R_MAX: f64 = 8.0;

/// Slack for the σ ⟹ `1/n` implication, which is exact up to interpolation.
const CHAIN_TOLERANCE: f64 = 1e-9;

/// Joint estimates of `(γ(M), γ(K), γ(L))`.
#[derive(Clone, Debug)]
pub struct PairEstimates {
    pub name: String,
    pub n: usize,
    pub lambda: f64,
    pub delta: f64,
    joint: Joint,
    inputs: serde_json::Value,
}

pub fn pair_estimates(case: &CheckCase) -> Result<PairEstimates> {
    case.validate(false)?;
    let l = case.l_body();
    let m = Body::minkowski_combine(case.lambda, &case.k, l)?;
    let mut joint = joint_measures(&[&m, &case.k, l], case.budget())?;
    if !joint.exact {
        // All-inside samples give p = 1; keep the transforms finite.
        let cap = 1.0 - 0.5 / case.samples as f64;
        for v in joint.values.iter_mut() {
            *v = v.min(cap);
        }
    }
    Ok(PairEstimates {
        name: case.name.clone(),
        n: case.dim(),
        lambda: case.lambda,
        delta: case.delta,
        joint,
        inputs: serde_json::to_value(case).unwrap_or(serde_json::Value::Null),
    })
}

impl PairEstimates {
    pub fn values(&self) -> (f64, f64, f64) {
        let v = &self.joint.values;
        (v[0], v[1], v[2])
    }

    pub fn is_exact(&self) -> bool {
        self.joint.exact
    }

    /// `γ(M)^{δ/n}` against `λγ(K)^{δ/n} + (1−λ)γ(L)^{δ/n}`. Past `δ = 1` no
    /// theorem applies, so the result is filed as an optimality probe.
    pub fn dim_bm(&self) -> CheckResult {
        let kind = if self.delta > 1.0 { CheckKind::ExponentOptimality } else { CheckKind::DimBm };
        self.power(self.delta / self.n as f64, kind)
    }

    fn power(&self, e: f64, kind: CheckKind) -> CheckResult {
        let lam = self.lambda;
        self.joint.result(
            kind,
            &self.name,
            self.inputs.clone(),
            |v| v[0].powf(e),
            |v| lam * v[1].powf(e) + (1.0 - lam) * v[2].powf(e),
        )
    }

    /// `Φ⁻¹(γ(M))` against `λΦ⁻¹(γ(K)) + (1−λ)Φ⁻¹(γ(L))`.
    pub fn ehrhard(&self) -> CheckResult {
        let lam = self.lambda;
        self.joint.result(
            CheckKind::Ehrhard,
            &self.name,
            self.inputs.clone(),
            |v| phi_inv(v[0]),
            |v| lam * phi_inv(v[1]) + (1.0 - lam) * phi_inv(v[2]),
        )
    }

    /// `log γ(M)` against `λ log γ(K) + (1−λ) log γ(L)`.
    pub fn log_concavity(&self) -> CheckResult {
        let lam = self.lambda;
        self.joint.result(
            CheckKind::LogConcavity,
            &self.name,
            self.inputs.clone(),
            |v| v[0].ln(),
            |v| lam * v[1].ln() + (1.0 - lam) * v[2].ln(),
        )
    }

    pub fn sigma_refinement(&self, table: &SigmaTable) -> Result<SigmaRefinement> {
        if table.n != self.n {
            return Err(GbmError::DimensionMismatch { expected: self.n, got: table.n });
        }
        let lam = self.lambda;
        let sigma = self.joint.result(
            CheckKind::SigmaRefinement,
            &self.name,
            self.inputs.clone(),
            |v| table.sigma_eval(v[0]),
            |v| lam * table.sigma_eval(v[1]) + (1.0 - lam) * table.sigma_eval(v[2]),
        );
        let dim = self.power(1.0 / self.n as f64, CheckKind::DimBm);
        let chain_holds = sigma.margin < 0.0 || dim.margin >= -CHAIN_TOLERANCE;
        Ok(SigmaRefinement { sigma, dim, chain_holds })
    }
}

/// The σ-refined inequality together with the plain `1/n` inequality on the same estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaRefinement {
    pub sigma: CheckResult,
    pub dim: CheckResult,
    /// `σ-margin ≥ 0 ⟹ 1/n-margin ≥ −10⁻⁹`.
    pub chain_holds: bool,
}

pub fn check_dim_bm(case: &CheckCase) -> Result<CheckResult> {
    case.validate(true)?;
    Ok(pair_estimates(case)?.dim_bm())
}

pub fn check_ehrhard(case: &CheckCase) -> Result<CheckResult> {
    Ok(pair_estimates(case)?.ehrhard())
}

pub fn check_log_concavity(case: &CheckCase) -> Result<CheckResult> {
    Ok(pair_estimates(case)?.log_concavity())
}

pub fn check_sigma_refinement(case: &CheckCase, table: &SigmaTable) -> Result<SigmaRefinement> {
    case.validate(true)?;
    pair_estimates(case)?.sigma_refinement(table)
}

/// Searches dilates `aQ, bQ` of `Q = [−1,1]ⁿ` for a violation of the inequality
/// with exponent `δ/n`, using exact box measures. Returns the most negative case.
pub fn check_exponent_optimality(n: usize, delta: f64) -> Result<CheckResult> {
    if !(delta > 1.0) || !delta.is_finite() {
        return Err(GbmError::invalid(format!("δ = {delta} must exceed 1")));
    }
    let mut scales: Vec<f64> = (0..12).map(|j| 0.5 * 0.5f64.powi(j)).collect();
    scales.push(0.01);
    let mut best: Option<CheckResult> = None;
    for &a in &scales {
        for &lambda in &[0.25, 0.5, 0.75] {
            let case = CheckCase::new(
                format!("dilate-boxes-n{n}-a{a}-b{}-lambda{lambda}", 2.0 * a),
                Body::cube(n, a)?,
                Body::cube(n, 2.0 * a)?,
                lambda,
                SamplingBudget::new(1, 0),
            )
            .with_delta(delta);
            let est = pair_estimates(&case)?;
            debug_assert!(est.is_exact());
            let r = est.dim_bm();
            if best.as_ref().map_or(true, |b| r.margin_sigmas < b.margin_sigmas) {
                best = Some(r);
            }
        }
    }
    Ok(best.expect("the search grid is not empty"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualityCaseReport {
    pub eps: Vec<f64>,
    /// One `1/n` check of `(K, (1−ε)K + εB)` per ε.
    pub results: Vec<CheckResult>,
    /// No margin is significantly negative.
    pub nonnegative: bool,
    /// Margins do not grow as ε decreases, beyond three combined standard errors.
    pub monotone: bool,
    /// `|margin| ≤ 3σ` (or round-off) at the smallest ε.
    pub vanishes_at_zero: bool,
}

/// Perturbs `L = (1−ε)K + εB` and follows the margin of the `1/n` inequality as ε → 0.
/// `ε = 0` is run as `L = K`.
pub fn check_equality_case(
    k: &Body,
    lambda: f64,
    eps_list: &[f64],
    budget: SamplingBudget,
) -> Result<EqualityCaseReport> {
    if eps_list.is_empty() {
        return Err(GbmError::invalid("empty ε list"));
    }
    let mut eps = eps_list.to_vec();
    if eps.iter().any(|e| !(0.0..1.0).contains(e)) {
        return Err(GbmError::invalid("perturbation sizes must lie in [0, 1)"));
    }
    eps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ball = Body::ball(k.dim(), 1.0)?;
    let mut results = Vec::with_capacity(eps.len());
    for &e in &eps {
        let l = if e == 0.0 { k.clone() } else { Body::minkowski_combine(1.0 - e, k, &ball)? };
        let case = CheckCase::new(format!("equality-eps{e}"), k.clone(), l, lambda, budget);
        let mut r = check_dim_bm(&case)?;
        r.check = CheckKind::EqualityCase;
        results.push(r);
    }
    let nonnegative = results.iter().all(|r| r.verdict == Verdict::Holds);
    let monotone = results.windows(2).all(|w| {
        let s = (w[0].margin_std_error.powi(2) + w[1].margin_std_error.powi(2)).sqrt();
        w[0].margin <= w[1].margin + 3.0 * s + 1e-12
    });
    let vanishes_at_zero = results[0].margin_sigmas.abs() <= 3.0;
    Ok(EqualityCaseReport { eps, results, nonnegative, monotone, vanishes_at_zero })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeomeanChainReport {
    /// `Ψ⁻¹(γ(M))` against `sup_p c(p) Ψ⁻¹(γ(K)^p γ(L)^{1−p})`.
    pub chain: CheckResult,
    /// Maximiser of the right-hand side on the grid.
    pub best_p: f64,
    /// `γ(K^λ L^{1−λ})` against `γ(K)^λ γ(L)^{1−λ}` on the outer approximation.
    pub direct: CheckResult,
}

/// `c(p) = (λ/p)^p ((1−λ)/(1−p))^{1−p}`, at most 1 with equality at `p = λ`.
fn chain_weight(lambda: f64, p: f64) -> f64 {
    (p * (lambda / p).ln() + (1.0 - p) * ((1.0 - lambda) / (1.0 - p)).ln()).exp()
}

/// Planar check of the geometric-mean chain; both bodies must be origin-symmetric convex.
pub fn check_geomean_chain(
    k: &Body,
    l: &Body,
    lambda: f64,
    p_grid: &[f64],
    budget: SamplingBudget,
) -> Result<GeomeanChainReport> {
    if k.dim() != 2 {
        return Err(GbmError::invalid("the geometric-mean chain is checked in the plane only"));
    }
    if p_grid.is_empty() || p_grid.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(GbmError::invalid("p grid must be a non-empty subset of (0, 1)"));
    }
    let case = CheckCase::new("geomean-chain", k.clone(), l.clone(), lambda, budget);
    case.validate(true)?;
    let inputs = serde_json::json!({ "case": case, "p_grid": p_grid });
    let est = pair_estimates(&case)?;
    let n = 2;
    let rhs_at = |v: &[f64], p: f64| chain_weight(lambda, p) * psi_n_inv(v[1].powf(p) * v[2].powf(1.0 - p), n);
    let values = est.joint.values.clone();
    let best_p = p_grid
        .iter()
        .cloned()
        .max_by(|a, b| rhs_at(&values, *a).partial_cmp(&rhs_at(&values, *b)).unwrap())
        .unwrap();
    let mut chain = est.joint.result(
        CheckKind::GeomeanChain,
        "geomean-chain",
        inputs.clone(),
        |v| psi_n_inv(v[0], n),
        |v| p_grid.iter().map(|&p| rhs_at(v, p)).fold(f64::MIN, f64::max),
    );
    chain.notes.push(format!("supremum attained at p = {best_p}"));

    let g = Body::geometric_mean(lambda, k, l)?;
    let joint = joint_measures(&[&g, k, l], budget.with_seed(derive_seed(budget.seed, 1)))?;
    let mut direct = joint.result(
        CheckKind::LogBm2,
        "geomean-direct",
        inputs,
        |v| v[0].ln(),
        |v| lambda * v[1].ln() + (1.0 - lambda) * v[2].ln(),
    );
    if g.is_approximate() && !direct.notes.iter().any(|s| s.contains("outer")) {
        direct.notes.push("a body is an outer approximation; its measure is biased upward".into());
    }
    Ok(GeomeanChainReport { chain, best_p, direct })
}
