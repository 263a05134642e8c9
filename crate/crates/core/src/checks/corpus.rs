//! Seeded test corpora and their parallel execution.

use super::lemmas::{check_b_variance, check_ball_second_moment, check_brascamp_lieb, check_dilate_lemma, odd_cubic_family};
use super::pairs::{pair_estimates, CHECK_TABLE_R_MAX};
use super::{derive_seed, CheckCase, CheckKind, CheckResult, Verdict};
use crate::bodies::Body;
use crate::error::{GbmError, Result};
use crate::gaussmeasure::SamplingBudget;
use crate::sigma::{SigmaTable, DEFAULT_NODES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

pub const DEFAULT_CORPUS_SEED: u64 = 20_231_117;
/// 24 cases for each of the nine `(n, λ)` combinations.
pub const DEFAULT_CORPUS_SIZE: usize = 216;
const DIMS: [usize; 3] = [2, 3, 4];
const LAMBDAS: [f64; 3] = [0.25, 0.5, 0.75];
/// Largest ellipsoid condition number in generated corpora.
const MAX_CONDITION: f64 = 20.0;

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn primitive(rng: &mut ChaCha8Rng, n: usize, kind: u32) -> Result<Body> {
    match kind {
        0 => {
            let k = rng.random_range(n..=8);
            let s = rng.random_range(0.8..2.0);
            let v: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            let z: f64 = rng.sample(StandardNormal);
                            round4(s * z)
                        })
                        .collect()
                })
                .collect();
            Body::sym_polytope(v)
        }
        1 => {
            let base = rng.random_range(0.5..1.6);
            let spread = 0.5 * MAX_CONDITION.ln();
            let axes = (0..n).map(|_| round4(base * (spread * rng.random_range(-1.0..1.0)).exp())).collect();
            Body::ellipsoid(axes)
        }
        _ => Body::cuboid((0..n).map(|_| round4(rng.random_range(0.3..1.8))).collect()),
    }
}

fn random_body(rng: &mut ChaCha8Rng, n: usize) -> Result<Body> {
    let kind = rng.random_range(0..4u32);
    if kind == 3 {
        let mu = round4(rng.random_range(0.2..0.8));
        let (a, b) = (rng.random_range(0..3u32), rng.random_range(0..3u32));
        let p = primitive(rng, n, a)?;
        let q = primitive(rng, n, b)?;
        Body::minkowski_combine(mu, &p, &q)
    } else {
        primitive(rng, n, kind)
    }
}

/// Cycles through `n ∈ {2,3,4}` and `λ ∈ {¼,½,¾}`; every tenth case has `L = K`.
pub fn generate_corpus(seed: u64, count: usize, samples: u64) -> Result<Vec<CheckCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let n = DIMS[i % 3];
        let lambda = LAMBDAS[(i / 3) % 3];
        let k = random_body(&mut rng, n)?;
        let same = i % 10 == 0;
        let l = if same { k.clone() } else { random_body(&mut rng, n)? };
        let tag = |b: &Body| b.kind().name().to_string();
        let name = format!("case-{i:03}-n{n}-{}-{}", tag(&k), if same { "same".into() } else { tag(&l) });
        let case_seed = rng.random::<u32>() as u64;
        out.push(CheckCase {
            name,
            k,
            l: if same { None } else { Some(l) },
            lambda,
            delta: 1.0,
            samples,
            seed: case_seed,
        });
    }
    Ok(out)
}

/// JSON array with one compact case per line, the format of checked-in corpora.
pub fn corpus_to_json(cases: &[CheckCase]) -> String {
    let lines: Vec<String> =
        cases.iter().map(|c| serde_json::to_string(c).expect("cases always serialise")).collect();
    format!("[\n{}\n]\n", lines.join(",\n"))
}

/// Parses a JSON array of cases; shape errors become [`GbmError::Schema`].
pub fn load_corpus(json: &str) -> Result<Vec<CheckCase>> {
    let cases: Vec<CheckCase> =
        serde_json::from_str(json).map_err(|e| GbmError::Schema(format!("corpus: {e}")))?;
    let mut names: Vec<&str> = cases.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(GbmError::Schema(format!("duplicate case name '{}'", w[0])));
    }
    Ok(cases)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusOptions {
    /// Also run the single-body lemmas on each `K`.
    pub lemmas: bool,
    /// Odd cubics per body for the Brascamp–Lieb check.
    pub bl_functions: usize,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions { lemmas: true, bl_functions: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub name: String,
    pub results: Vec<CheckResult>,
    /// `σ-margin ≥ 0 ⟹ 1/n-margin ≥ 0` on this case's estimates.
    pub chain_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusOutcome {
    /// Sorted by case name.
    pub reports: Vec<CaseReport>,
    /// `check → verdict → count`.
    pub counts: BTreeMap<String, BTreeMap<Verdict, usize>>,
    pub theorem_violations: usize,
    pub chain_failures: usize,
}

impl CorpusOutcome {
    pub fn results(&self) -> impl Iterator<Item = &CheckResult> {
        self.reports.iter().flat_map(|r| r.results.iter())
    }

    pub fn count(&self, kind: CheckKind, verdict: Verdict) -> usize {
        self.counts.get(kind.as_str()).and_then(|m| m.get(&verdict)).copied().unwrap_or(0)
    }
}

fn tables_for(cases: &[CheckCase]) -> Result<BTreeMap<usize, SigmaTable>> {
    let mut dims: Vec<usize> = cases.iter().map(|c| c.dim()).collect();
    dims.sort_unstable();
    dims.dedup();
    dims.into_par_iter()
        .map(|n| SigmaTable::build(n, CHECK_TABLE_R_MAX, DEFAULT_NODES).map(|t| (n, t)))
        .collect()
}

fn run_case(case: &CheckCase, table: &SigmaTable, opts: CorpusOptions) -> Result<CaseReport> {
    let est = pair_estimates(case)?;
    let sig = est.sigma_refinement(table)?;
    let mut results = vec![est.dim_bm(), sig.sigma, est.ehrhard(), est.log_concavity()];
    if opts.lemmas {
        let b = |salt| SamplingBudget::new(case.samples, derive_seed(case.seed, salt));
        results.push(check_ball_second_moment(&case.k, b(11))?);
        results.extend(check_dilate_lemma(&case.k, &[0.25, 0.5, 0.75], b(12))?);
        results.push(check_b_variance(&case.k, b(13))?);
        if opts.bl_functions > 0 {
            let fam = odd_cubic_family(case.dim(), opts.bl_functions, derive_seed(case.seed, 14));
            results.extend(check_brascamp_lieb(&case.k, &fam, b(15))?);
        }
    }
    for r in results.iter_mut().skip(4) {
        r.name = format!("{}/{}", case.name, r.name);
    }
    Ok(CaseReport { name: case.name.clone(), results, chain_holds: sig.chain_holds })
}

/// Runs every case in parallel. Results do not depend on the worker count.
pub fn run_corpus(cases: &[CheckCase], opts: CorpusOptions) -> Result<CorpusOutcome> {
    for c in cases {
        c.validate(true)?;
    }
    let tables = tables_for(cases)?;
    let mut reports: Vec<CaseReport> = cases
        .par_iter()
        .map(|c| run_case(c, &tables[&c.dim()], opts))
        .collect::<Result<_>>()?;
    reports.sort_by(|a, b| a.name.cmp(&b.name));
    let mut counts: BTreeMap<String, BTreeMap<Verdict, usize>> = BTreeMap::new();
    let mut theorem_violations = 0;
    for r in reports.iter().flat_map(|r| r.results.iter()) {
        *counts.entry(r.check.as_str().to_string()).or_default().entry(r.verdict).or_default() += 1;
        if r.verdict == Verdict::Violated && r.check.theorem_backed() {
            theorem_violations += 1;
        }
    }
    let chain_failures = reports.iter().filter(|r| !r.chain_holds).count();
    Ok(CorpusOutcome { reports, counts, theorem_violations, chain_failures })
}

/// One JSON object per check result.
pub fn write_jsonl<W: Write>(outcome: &CorpusOutcome, mut w: W) -> Result<()> {
    for r in outcome.results() {
        let line = serde_json::to_string(r).map_err(|e| GbmError::Schema(e.to_string()))?;
        writeln!(w, "{line}").map_err(io_err)?;
    }
    Ok(())
}

/// `name, check, lhs, rhs, margin, sigmas, verdict`.
pub fn write_csv_summary<W: Write>(outcome: &CorpusOutcome, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["name", "check", "lhs", "rhs", "margin", "sigmas", "verdict"]).map_err(csv_err)?;
    for r in outcome.results() {
        let verdict = match r.verdict {
            Verdict::Holds => "holds",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Violated => "violated",
        };
        out.write_record([
            r.name.clone(),
            r.check.as_str().to_string(),
            format!("{:.12e}", r.lhs.value),
            format!("{:.12e}", r.rhs.value),
            format!("{:.6e}", r.margin),
            format!("{:.4}", r.margin_sigmas),
            verdict.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

fn io_err(e: std::io::Error) -> GbmError {
    GbmError::Io(e.to_string())
}

fn csv_err(e: csv::Error) -> GbmError {
    GbmError::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seeded() {
        let a = generate_corpus(3, 12, 1000).unwrap();
        let b = generate_corpus(3, 12, 1000).unwrap();
        assert_eq!(a, b);
        assert!(a[0].l.is_none());
        assert!(a.iter().all(|c| c.validate(true).is_ok()));
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let a = generate_corpus(3, 2, 1000).unwrap();
        let mut doubled = a.clone();
        doubled[1].name = doubled[0].name.clone();
        assert!(load_corpus(&serde_json::to_string(&doubled).unwrap()).is_err());
        assert_eq!(load_corpus(&serde_json::to_string(&a).unwrap()).unwrap(), a);
    }
}
