//! Inequalities turned into verdicts with explicit error accounting.
//!
//! Every check produces a [`CheckResult`] holding both sides with standard
//! errors, the margin `lhs − rhs` and its standard error. Monte Carlo bodies that
//! enter the same check share sample points, so the margin's error comes from
//! the joint covariance through the delta method rather than from adding the
//! two sides' errors.

mod corpus;
mod lemmas;
mod pairs;

pub use corpus::{
    corpus_to_json, generate_corpus, load_corpus, run_corpus, write_csv_summary, write_jsonl, CaseReport,
    CorpusOptions, CorpusOutcome, DEFAULT_CORPUS_SEED, DEFAULT_CORPUS_SIZE,
};
pub use lemmas::{
    check_b_variance, check_ball_second_moment, check_brascamp_lieb, check_dilate_lemma,
    check_xi_profile, odd_cubic_family, OddCubic, XiProfileReport,
};
pub use pairs::{
    check_dim_bm, check_ehrhard, check_equality_case, check_exponent_optimality,
    check_geomean_chain, check_log_concavity, check_sigma_refinement, pair_estimates,
    EqualityCaseReport, GeomeanChainReport, PairEstimates, SigmaRefinement, CHECK_TABLE_R_MAX,
};

use crate::bodies::Body;
use crate::error::{GbmError, Result};
use crate::gaussmeasure::{measure_exact, sample_moments, SamplingBudget, MIN_HITS};
use serde::{Deserialize, Serialize};

/// Below `−3σ` a check is no longer reported as holding.
pub const HOLDS_SIGMAS: f64 = -3.0;
/// At or below `−5σ` it is reported as violated.
pub const VIOLATED_SIGMAS: f64 = -5.0;
/// Round-off allowance `(1 + |lhs| + |rhs|)·10⁻¹²` used in place of a zero standard error.
pub const NUMERIC_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Inconclusive,
    Violated,
}

impl Verdict {
    pub fn from_sigmas(s: f64) -> Verdict {
        if s >= HOLDS_SIGMAS {
            Verdict::Holds
        } else if s <= VIOLATED_SIGMAS {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    DimBm,
    ExponentOptimality,
    Ehrhard,
    LogConcavity,
    SigmaRefinement,
    EqualityCase,
    BallSecondMoment,
    DilateLemma,
    GeomeanChain,
    LogBm2,
    BVariance,
    BrascampLieb,
}

impl CheckKind {
    /// Whether a violation contradicts a proved statement. Exponent optimality
    /// looks for violations on purpose.
    pub fn theorem_backed(self) -> bool {
        !matches!(self, CheckKind::ExponentOptimality)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::DimBm => "dim-bm",
            CheckKind::ExponentOptimality => "exponent-optimality",
            CheckKind::Ehrhard => "ehrhard",
            CheckKind::LogConcavity => "log-concavity",
            CheckKind::SigmaRefinement => "sigma-refinement",
            CheckKind::EqualityCase => "equality-case",
            CheckKind::BallSecondMoment => "ball-second-moment",
            CheckKind::DilateLemma => "dilate-lemma",
            CheckKind::GeomeanChain => "geomean-chain",
            CheckKind::LogBm2 => "log-bm2",
            CheckKind::BVariance => "b-variance",
            CheckKind::BrascampLieb => "brascamp-lieb",
        }
    }
}

fn default_delta() -> f64 {
    1.0
}

/// One input to the pair checks: `K`, optional `L` (defaults to `K`), `λ`, the
/// exponent multiplier `δ` and the sampling budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckCase {
    pub name: String,
    pub k: Body,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Body>,
    pub lambda: f64,
    /// The inequality is tested with exponent `δ/n`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub samples: u64,
    pub seed: u64,
}

impl CheckCase {
    pub fn new(name: impl Into<String>, k: Body, l: Body, lambda: f64, budget: SamplingBudget) -> Self {
        CheckCase {
            name: name.into(),
            k,
            l: Some(l),
            lambda,
            delta: 1.0,
            samples: budget.samples,
            seed: budget.seed,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn budget(&self) -> SamplingBudget {
        SamplingBudget::new(self.samples, self.seed)
    }

    pub fn l_body(&self) -> &Body {
        self.l.as_ref().unwrap_or(&self.k)
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    /// Checks `λ ∈ (0,1)`, `δ > 0`, matching dimensions, convexity and, when
    /// asked, origin symmetry of both bodies.
    pub fn validate(&self, require_symmetric: bool) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(GbmError::invalid(format!("{}: λ = {} not in (0, 1)", self.name, self.lambda)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(GbmError::invalid(format!("{}: δ = {} must be positive", self.name, self.delta)));
        }
        if self.samples == 0 {
            return Err(GbmError::invalid(format!("{}: zero samples", self.name)));
        }
        let l = self.l_body();
        crate::error::ensure_dim(self.k.dim(), l.dim())?;
        for b in [&self.k, l] {
            if !b.flags().convex {
                return Err(GbmError::invalid(format!("{}: bodies must be convex", self.name)));
            }
            if require_symmetric && !b.flags().origin_symmetric {
                return Err(GbmError::invalid(format!(
                    "{}: this check needs origin-symmetric bodies",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: CheckKind,
    pub name: String,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub margin: f64,
    /// Delta-method standard error of the margin under the joint covariance.
    pub margin_std_error: f64,
    pub margin_sigmas: f64,
    pub verdict: Verdict,
    /// Every input was evaluated without sampling.
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub inputs: serde_json::Value,
}

impl CheckResult {
    /// Assembles a result; `margin_sigmas` divides by the standard error, or by
    /// the round-off floor when that is larger.
    pub fn from_parts(
        check: CheckKind,
        name: impl Into<String>,
        lhs: Estimate,
        rhs: Estimate,
        margin_std_error: f64,
        exact: bool,
        inputs: serde_json::Value,
    ) -> CheckResult {
        let margin = lhs.value - rhs.value;
        let floor = NUMERIC_FLOOR * (1.0 + lhs.value.abs() + rhs.value.abs());
        let scale = margin_std_error.max(floor);
        let margin_sigmas = if margin == 0.0 { 0.0 } else { margin / scale };
        CheckResult {
            check,
            name: name.into(),
            lhs,
            rhs,
            margin,
            margin_std_error,
            margin_sigmas,
            verdict: Verdict::from_sigmas(margin_sigmas),
            exact,
            notes: Vec::new(),
            inputs,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// Means of several integrands and the covariance matrix of those means.
#[derive(Clone, Debug)]
pub(crate) struct Joint {
    pub values: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub exact: bool,
    pub outer_biased: bool,
}

impl Joint {
    pub fn from_exact(values: Vec<f64>) -> Joint {
        let m = values.len();
        Joint { values, cov: vec![vec![0.0; m]; m], exact: true, outer_biased: false }
    }

    /// Evaluates `lhs` and `rhs` on the means and propagates errors.
    pub fn result<F, G>(
        &self,
        check: CheckKind,
        name: &str,
        inputs: serde_json::Value,
        lhs: F,
        rhs: G,
    ) -> CheckResult
    where
        F: Fn(&[f64]) -> f64,
        G: Fn(&[f64]) -> f64,
    {
        let l = Estimate { value: lhs(&self.values), std_error: delta_se(&lhs, &self.values, &self.cov) };
        let r = Estimate { value: rhs(&self.values), std_error: delta_se(&rhs, &self.values, &self.cov) };
        let m_se = delta_se(|v: &[f64]| lhs(v) - rhs(v), &self.values, &self.cov);
        let res = CheckResult::from_parts(check, name, l, r, m_se, self.exact, inputs);
        if self.outer_biased {
            res.with_note("a body is an outer approximation; its measure is biased upward")
        } else {
            res
        }
    }
}

/// Delta-method standard error of `f(mean)` with central differences.
pub(crate) fn delta_se<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], cov: &[Vec<f64>]) -> f64 {
    let m = x.len();
    let active: Vec<usize> = (0..m).filter(|&i| cov[i][i] > 0.0).collect();
    if active.is_empty() {
        return 0.0;
    }
    let mut grad = vec![0.0; m];
    let mut y = x.to_vec();
    for &i in &active {
        let step = 1e-6 * x[i].abs().max(cov[i][i].sqrt()).max(1e-300);
        y[i] = x[i] + step;
        let up = f(&y);
        y[i] = x[i] - step;
        let down = f(&y);
        y[i] = x[i];
        grad[i] = (up - down) / (2.0 * step);
    }
    let mut var = 0.0;
    for &i in &active {
        for &j in &active {
            var += grad[i] * cov[i][j] * grad[j];
        }
    }
    if var.is_finite() {
        var.max(0.0).sqrt()
    } else {
        f64::INFINITY
    }
}

/// `γₙ` of each body with common random numbers across the sampled ones.
pub(crate) fn joint_measures(bodies: &[&Body], budget: SamplingBudget) -> Result<Joint> {
    let dim = bodies[0].dim();
    for b in bodies {
        crate::error::ensure_dim(dim, b.dim())?;
    }
    let mut values = vec![0.0; bodies.len()];
    let mut sampled = Vec::new();
    for (i, b) in bodies.iter().enumerate() {
        match measure_exact(b) {
            Some(e) => values[i] = e.value,
            None => sampled.push(i),
        }
    }
    let m = bodies.len();
    let mut cov = vec![vec![0.0; m]; m];
    let outer_biased = sampled.iter().any(|&i| bodies[i].is_approximate());
    if !sampled.is_empty() {
        let targets: Vec<&Body> = sampled.iter().map(|&i| bodies[i]).collect();
        let mom = sample_moments(dim, budget, targets.len(), true, |x, out| {
            for (o, b) in out.iter_mut().zip(&targets) {
                *o = if b.contains_unchecked(x) { 1.0 } else { 0.0 };
            }
        })?;
        for (a, &i) in sampled.iter().enumerate() {
            let hits = mom.sum(a).round() as u64;
            if hits < MIN_HITS {
                return Err(GbmError::InsufficientHits { hits, required: MIN_HITS });
            }
            values[i] = mom.mean(a);
            for (c, &j) in sampled.iter().enumerate() {
                cov[i][j] = mom.cov_of_means(a, c);
            }
        }
    }
    Ok(Joint { values, cov, exact: sampled.is_empty(), outer_biased })
}

/// Stable per-check seed derived from a case seed.
pub(crate) fn derive_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_bands() {
        assert_eq!(Verdict::from_sigmas(-3.0), Verdict::Holds);
        assert_eq!(Verdict::from_sigmas(-4.0), Verdict::Inconclusive);
        assert_eq!(Verdict::from_sigmas(-5.0), Verdict::Violated);
        assert_eq!(Verdict::from_sigmas(10.0), Verdict::Holds);
    }

    #[test]
    fn delta_method_on_a_product() {
        // Var(xy) ≈ y²σx² + x²σy² + 2xyσxy.
        let cov = vec![vec![0.04, 0.01], vec![0.01, 0.09]];
        let se = delta_se(|v: &[f64]| v[0] * v[1], &[2.0, 3.0], &cov);
        let exact = (9.0 * 0.04 + 4.0 * 0.09 + 12.0 * 0.01f64).sqrt();
        assert!((se - exact).abs() < 1e-8);
    }

    #[test]
    fn exact_zero_margin_has_zero_sigmas() {
        let e = Estimate { value: 0.3, std_error: 0.0 };
        let r = CheckResult::from_parts(CheckKind::DimBm, "x", e, e, 0.0, true, serde_json::Value::Null);
        assert_eq!(r.margin_sigmas, 0.0);
        assert_eq!(r.verdict, Verdict::Holds);
    }
}
