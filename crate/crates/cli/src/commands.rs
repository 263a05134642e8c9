use crate::output::{read_file, write_file, write_json, Sink};
use crate::{CheckArgs, CorpusArgs, Failure, Format, MeasureArgs, PdeArgs, SigmaArgs, SlabArgs};
use gbm_core::checks::{self, CorpusOptions};
use gbm_core::gaussmeasure::{self, MeasureEstimate};
use gbm_core::localpde::{self, BoundaryData};
use gbm_core::{Body, BodyKind, GbmError, SamplingBudget, SigmaTable};
use serde_json::{json, Value};
use std::path::Path;

type Outcome = Result<u8, Failure>;

fn csv_failure(e: csv::Error) -> Failure {
    Failure::io(Path::new("<output>"), e)
}

fn load_body(path: &Path) -> Result<Body, Failure> {
    Ok(Body::from_json(&read_file(path)?)?)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports always serialise")
}

/// Exact value when one exists, else Monte Carlo with the mandatory seed.
fn estimate(
    body: &Body,
    what: &str,
    exact_only: bool,
    sampling: &crate::Sampling,
    exact: fn(&Body) -> Option<MeasureEstimate>,
    sampled: fn(&Body, SamplingBudget) -> gbm_core::Result<MeasureEstimate>,
) -> Result<MeasureEstimate, Failure> {
    if let Some(e) = exact(body) {
        return Ok(e);
    }
    if exact_only {
        return Err(GbmError::Unsupported(format!(
            "no closed form for the {what} of a '{}' body; drop --exact and pass --seed",
            body.kind().name()
        ))
        .into());
    }
    let seed = sampling
        .seed
        .ok_or_else(|| Failure::usage(format!("the {what} of this body needs Monte Carlo: pass --seed")))?;
    Ok(sampled(body, SamplingBudget::new(sampling.samples, seed))?)
}

pub fn measure(a: &MeasureArgs, out: &Sink) -> Outcome {
    let body = load_body(&a.body)?;
    let m = estimate(&body, "measure", a.exact, &a.sampling, gaussmeasure::measure_exact, gaussmeasure::measure)?;
    let second = if a.second_moment {
        Some(estimate(
            &body,
            "second moment",
            a.exact,
            &a.sampling,
            gaussmeasure::second_moment_exact,
            gaussmeasure::second_moment,
        )?)
    } else {
        None
    };
    match out.format {
        Format::Json => {
            let mut report = json!({
                "schema": "gbm.measure.v1",
                "dim": body.dim(),
                "body": to_value(&body),
                "measure": to_value(&m),
            });
            if let Some(s) = &second {
                report["second_moment"] = to_value(s);
            }
            out.json(&report)?;
        }
        Format::Csv => out.with_writer(|w| {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(["quantity", "value", "std_error", "method", "samples", "seed"]).map_err(csv_failure)?;
            let rows = std::iter::once(("measure", &m)).chain(second.as_ref().map(|s| ("second_moment", s)));
            for (q, e) in rows {
                let method = to_value(&e.method);
                wr.write_record([
                    q.to_string(),
                    format!("{:e}", e.value),
                    format!("{:e}", e.std_error),
                    method.as_str().unwrap_or_default().to_string(),
                    e.samples.map(|s| s.to_string()).unwrap_or_default(),
                    e.seed.map(|s| s.to_string()).unwrap_or_default(),
                ])
                .map_err(csv_failure)?;
            }
            wr.flush().map_err(|e| Failure::io(Path::new("<output>"), e))
        })?,
    }
    Ok(0)
}

pub fn sigma(a: &SigmaArgs, out: &Sink) -> Outcome {
    let t = SigmaTable::build(a.n, a.r_max, a.nodes as usize)?;
    match out.format {
        Format::Csv => out.with_writer(|w| Ok(t.write_csv(w)?))?,
        Format::Json => {
            let residual = t.ode_residuals().into_iter().fold(0.0, f64::max);
            let cert = t.certify_pow_convexity();
            let report = json!({
                "schema": "gbm.sigma.v1",
                "n": t.n,
                "nodes": t.r_grid.len(),
                "r_max": t.r_max(),
                "normalization": to_value(&t.normalization),
                "max_ode_residual": residual,
                "convexity": {
                    "min_margin": cert.min_margin,
                    "min_margin_on_01_3": cert.min_margin_on_01_3,
                    "min_second_difference": cert.min_second_difference,
                    "passed": cert.passed,
                },
                "table": {
                    "r": t.r_grid,
                    "psi": t.psi,
                    "sigma": t.sigma,
                    "sigma_prime": t.sigma_prime,
                },
            });
            out.json(&report)?;
        }
    }
    Ok(0)
}

pub fn pde(a: &PdeArgs, out: &Sink) -> Outcome {
    let body = load_body(&a.body)?;
    let bc = BoundaryData::parse(&a.bc)?;
    if a.levels == 0 || a.levels > 8 {
        return Err(Failure::usage("--levels must be between 1 and 8"));
    }
    let hs: Vec<f64> = (0..a.levels).rev().map(|k| a.h * (1u32 << k) as f64).collect();
    let (ladder, report) = localpde::convergence_ladder(&body, bc, &hs)?;
    let reference = match (body.effective().kind(), bc) {
        (BodyKind::Ball { radius }, BoundaryData::Zero) if body.dim() == 2 => {
            Some(localpde::radial_functional(2, *radius))
        }
        _ => None,
    };
    match out.format {
        Format::Json => {
            let mut doc = json!({
                "schema": "gbm.pde.v1",
                "body": to_value(&body),
                "boundary": bc.describe(),
                "h": a.h,
                "report": to_value(&report),
                "ladder": to_value(&ladder),
            });
            if let Some(r) = reference {
                doc["radial_reference"] = json!(r);
                doc["relative_error"] = json!((report.total - r).abs() / r);
            }
            out.json(&doc)?;
        }
        Format::Csv => out.with_writer(|w| {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record([
                "h",
                "total",
                "interior_only_total",
                "iterations",
                "asymmetry",
                "bl_full_lhs",
                "bl_traceless_lhs",
                "bl_rhs",
            ])
            .map_err(csv_failure)?;
            for l in &ladder.levels {
                wr.write_record([
                    format!("{:e}", l.h),
                    format!("{:e}", l.total),
                    format!("{:e}", l.interior_only_total),
                    l.iterations.to_string(),
                    format!("{:e}", l.asymmetry),
                    format!("{:e}", l.bl_full_lhs),
                    format!("{:e}", l.bl_traceless_lhs),
                    format!("{:e}", l.bl_rhs),
                ])
                .map_err(csv_failure)?;
            }
            wr.flush().map_err(|e| Failure::io(Path::new("<output>"), e))
        })?,
    }
    Ok(0)
}

pub fn slab(a: &SlabArgs, out: &Sink) -> Outcome {
    let nodes: Vec<usize> = a.nodes.iter().map(|&r| r as usize).collect();
    let study = localpde::slab_study(a.n, &a.eps, &nodes)?;
    match out.format {
        Format::Json => {
            let mut doc = to_value(&study);
            doc["schema"] = json!("gbm.slab.v1");
            doc["c_spread"] = json!(study.c_spread());
            out.json(&doc)?;
        }
        Format::Csv => out.with_writer(|w| {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(["resolution", "eps", "g_value", "lower_bound", "c_estimate", "poincare_bound", "gradient_energy"])
                .map_err(csv_failure)?;
            for (row, &res) in study.levels.iter().zip(&a.nodes) {
                for r in row {
                    wr.write_record([
                        res.to_string(),
                        format!("{:e}", r.eps),
                        format!("{:e}", r.g_value),
                        format!("{:e}", r.lower_bound),
                        format!("{:e}", r.c_estimate),
                        format!("{:e}", r.poincare_bound),
                        format!("{:e}", r.gradient_energy),
                    ])
                    .map_err(csv_failure)?;
                }
            }
            wr.flush().map_err(|e| Failure::io(Path::new("<output>"), e))
        })?,
    }
    Ok(0)
}

pub fn check(a: &CheckArgs, out: &Sink) -> Outcome {
    let mut cases = checks::load_corpus(&read_file(&a.corpus)?)?;
    if let Some(s) = a.samples {
        for c in &mut cases {
            c.samples = s;
        }
    }
    let opts = CorpusOptions { lemmas: !a.no_lemmas, bl_functions: a.bl_functions };
    let outcome = checks::run_corpus(&cases, opts)?;
    match out.format {
        Format::Json => out.with_writer(|w| Ok(checks::write_jsonl(&outcome, w)?))?,
        Format::Csv => out.with_writer(|w| Ok(checks::write_csv_summary(&outcome, w)?))?,
    }
    if let Some(p) = &a.summary {
        write_file(p, |w| Ok(checks::write_csv_summary(&outcome, w)?))?;
    }
    if let Some(p) = &a.report {
        let doc = json!({
            "schema": "gbm.check-summary.v1",
            "cases": outcome.reports.len(),
            "results": outcome.results().count(),
            "counts": to_value(&outcome.counts),
            "theorem_violations": outcome.theorem_violations,
            "chain_failures": outcome.chain_failures,
        });
        write_file(p, |w| write_json(w, &doc))?;
    }
    if outcome.theorem_violations > 0 {
        eprintln!("{} theorem-backed check(s) violated", outcome.theorem_violations);
        Ok(1)
    } else {
        Ok(0)
    }
}

pub fn corpus(a: &CorpusArgs, out: &Sink) -> Outcome {
    if out.format == Format::Csv {
        return Err(Failure::usage("corpora are JSON only"));
    }
    let cases = checks::generate_corpus(a.seed, a.count as usize, a.samples)?;
    let text = checks::corpus_to_json(&cases);
    out.with_writer(|w| w.write_all(text.as_bytes()).map_err(|e| Failure::io(Path::new("<output>"), e)))?;
    Ok(0)
}
