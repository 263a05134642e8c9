use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn gbm() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gbm"));
    for (k, _) in std::env::vars() {
        if k.starts_with("GBM_") {
            c.env_remove(k);
        }
    }
    c.env("RUST_BACKTRACE", "0");
    c
}

fn run(args: &[&str]) -> Output {
    gbm().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("no signal")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn schema_validator(name: &str) -> jsonschema::Validator {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas");
    let load = |f: &str| -> Value { serde_json::from_str(&std::fs::read_to_string(root.join(f)).unwrap()).unwrap() };
    let registry = jsonschema::Registry::new()
        .add("https://gbm.invalid/schemas/body.v1.json", load("body.v1.json"))
        .unwrap()
        .prepare()
        .unwrap();
    jsonschema::options().with_registry(&registry).build(&load(&format!("{name}.v1.json"))).unwrap()
}

fn assert_valid(name: &str, doc: &Value) {
    let v = schema_validator(name);
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

fn json_stdout(o: &Output) -> Value {
    assert_eq!(code(o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

const POLY: &str = r#"{"kind":"sym-polytope","dim":3,"params":{"vertices":[[1,0,0],[0,1,0],[0,0,1],[0.5,0.5,0.5]]}}"#;

#[test]
fn exact_ball_measure_matches_the_closed_form() {
    let dir = TempDir::new().unwrap();
    let ball = write(&dir, "ball2.json", r#"{"kind":"ball","dim":2,"params":{"radius":1.5}}"#);
    let doc = json_stdout(&run(&["measure", "--body", s(&ball), "--exact", "--second-moment"]));
    assert_valid("measure", &doc);
    let want = 1.0 - (-1.125f64).exp();
    assert!((doc["measure"]["value"].as_f64().unwrap() - want).abs() < 1e-14);
    assert_eq!(doc["measure"]["method"], "exact-closed-form");
    // ∫_{rB} |x|² dγ₂ = 2 − (r² + 2) e^{−r²/2}.
    let m2 = 2.0 - (2.25 + 2.0) * (-1.125f64).exp();
    assert!((doc["second_moment"]["value"].as_f64().unwrap() - m2).abs() < 1e-12);
}

#[test]
fn monte_carlo_needs_a_seed_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let poly = write(&dir, "poly.json", POLY);
    let missing = run(&["measure", "--body", s(&poly), "--samples", "1e6"]);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--seed"));

    let a = run(&["measure", "--body", s(&poly), "--samples", "1e6", "--seed", "7"]);
    let b = run(&["measure", "--body", s(&poly), "--samples", "1e6", "--seed", "7"]);
    let c = run(&["--workers", "3", "measure", "--body", s(&poly), "--samples", "1e6", "--seed", "7"]);
    let d = run(&["--workers", "1", "measure", "--body", s(&poly), "--samples", "1e6", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert_eq!(a.stdout, d.stdout);
    let doc = json_stdout(&a);
    assert_valid("measure", &doc);
    assert_eq!(doc["measure"]["seed"], 7);
    assert_eq!(doc["measure"]["samples"], 1_000_000);

    let env = gbm().args(["measure", "--body", s(&poly), "--samples", "1e6"]).env("GBM_SEED", "7").output().unwrap();
    assert_eq!(env.stdout, a.stdout);
}

#[test]
fn exit_codes_follow_the_documented_classes() {
    let dir = TempDir::new().unwrap();
    let poly = write(&dir, "poly.json", POLY);
    let bad = write(&dir, "bad.json", r#"{"kind":"ball","dim":2,"params":{"radius":1,"colour":3}}"#);
    let mismatch = write(&dir, "mm.json", r#"{"kind":"box","dim":3,"params":{"half_widths":[1,1]}}"#);
    let degenerate = write(&dir, "deg.json", r#"{"kind":"ball","dim":2,"params":{"radius":0}}"#);
    let tiny = write(&dir, "tiny.json", r#"{"kind":"sym-polytope","dim":2,"params":{"vertices":[[0.01,0],[0,0.01]]}}"#);
    let missing = dir.path().join("absent.json");
    assert_eq!(code(&run(&["measure", "--body", s(&missing)])), 3);
    assert_eq!(code(&run(&["measure", "--body", s(&bad)])), 4);
    assert_eq!(code(&run(&["measure", "--body", s(&mismatch)])), 5);
    assert_eq!(code(&run(&["measure", "--body", s(&degenerate)])), 6);
    assert_eq!(code(&run(&["measure", "--body", s(&poly), "--exact"])), 6);
    assert_eq!(code(&run(&["measure", "--body", s(&tiny), "--samples", "1000", "--seed", "1"])), 7);
    assert_eq!(code(&run(&["measure", "--bogus"])), 2);
    let unwritable = dir.path().join("no/such/dir/out.json");
    let ball = write(&dir, "ball.json", r#"{"kind":"ball","dim":2,"params":{"radius":1}}"#);
    assert_eq!(code(&run(&["measure", "--body", s(&ball), "--out", s(&unwritable)])), 3);

    let help = String::from_utf8(run(&["--help"]).stdout).unwrap();
    for c in 0..=7 {
        assert!(help.contains(&format!("  {c}  ")), "exit code {c} undocumented");
    }
}

#[test]
fn sigma_csv_has_the_table_columns() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sigma.csv");
    let o = run(&["sigma", "--n", "3", "--nodes", "4096", "--format", "csv", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,psi,sigma,sigma_prime"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 4096);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0] && w[1][2] > w[0][2]));

    let doc = json_stdout(&run(&["sigma", "--n", "2", "--nodes", "2000"]));
    assert_valid("sigma", &doc);
    assert_eq!(doc["convexity"]["passed"], true);
    assert!(doc["max_ode_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn pde_report_carries_functional_and_ladder() {
    let dir = TempDir::new().unwrap();
    let disk = write(&dir, "disk.json", r#"{"kind":"ball","dim":2,"params":{"radius":1.0}}"#);
    let out = dir.path().join("out.json");
    let o = run(&["pde", "--body", s(&disk), "--bc", "zero", "--h", "0.01", "--report", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_valid("pde", &doc);
    let hs: Vec<f64> = doc["ladder"]["levels"].as_array().unwrap().iter().map(|l| l["h"].as_f64().unwrap()).collect();
    assert_eq!(hs, vec![0.04, 0.02, 0.01]);
    assert!(doc["relative_error"].as_f64().unwrap() < 1e-2);

    let square = write(&dir, "sq.json", r#"{"kind":"box","dim":2,"params":{"half_widths":[0.8,0.8]}}"#);
    let doc = json_stdout(&run(&["pde", "--body", s(&square), "--bc", "cos:1.3", "--h", "0.05", "--levels", "2"]));
    assert_valid("pde", &doc);
    assert!(doc.get("radial_reference").is_none());
    let ball3 = write(&dir, "b3.json", r#"{"kind":"ball","dim":3,"params":{"radius":1.0}}"#);
    assert_eq!(code(&run(&["pde", "--body", s(&ball3), "--h", "0.05"])), 5);
    assert_eq!(code(&run(&["pde", "--body", s(&disk), "--h", "0.05", "--bc", "sine"])), 6);
}

#[test]
fn slab_study_report() {
    let doc = json_stdout(&run(&["slab", "--eps", "0.1,0.2", "--nodes", "17"]));
    assert_valid("slab", &doc);
    assert_eq!(doc["levels"][0].as_array().unwrap().len(), 2);
    assert_eq!(code(&run(&["slab", "--n", "3"])), 6);
}

#[test]
fn corpus_and_check_round_trip() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus.json");
    assert_eq!(code(&run(&["corpus", "--count", "6", "--samples", "20000", "--out", s(&corpus)])), 0);
    let cases: Value = serde_json::from_str(&std::fs::read_to_string(&corpus).unwrap()).unwrap();
    assert_valid("corpus", &cases);
    assert_eq!(cases.as_array().unwrap().len(), 6);

    let outputs: Vec<(Vec<u8>, Vec<u8>)> = ["1", "2"]
        .iter()
        .map(|w| {
            let (jsonl, csv, rep) =
                (dir.path().join(format!("r{w}.jsonl")), dir.path().join(format!("r{w}.csv")), dir.path().join("rep.json"));
            let o = run(&[
                "--workers", w, "check", "--corpus", s(&corpus), "--out", s(&jsonl), "--summary", s(&csv), "--report",
                s(&rep),
            ]);
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
            let summary: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
            assert_valid("check-summary", &summary);
            assert_eq!(summary["theorem_violations"], 0);
            (std::fs::read(&jsonl).unwrap(), std::fs::read(&csv).unwrap())
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);

    let validator = schema_validator("check-result");
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(validator.is_valid(&v), "{line}");
    }
    let csv = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert_eq!(csv.lines().next(), Some("name,check,lhs,rhs,margin,sigmas,verdict"));
    assert_eq!(csv.lines().count(), text.lines().count() + 1);
}

#[test]
fn optimality_probes_do_not_fail_a_check_run() {
    let dir = TempDir::new().unwrap();
    let box_ = |a: f64| format!(r#"{{"kind":"box","dim":2,"params":{{"half_widths":[{a},{a}]}}}}"#);
    let corpus = write(
        &dir,
        "probe.json",
        &format!(
            r#"[{{"name":"probe","k":{},"l":{},"lambda":0.5,"delta":1.5,"samples":1000,"seed":1}}]"#,
            box_(0.01),
            box_(0.02)
        ),
    );
    let o = run(&["check", "--corpus", s(&corpus), "--no-lemmas", "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("probe,exponent-optimality,") && l.ends_with(",violated")), "{csv}");

    let broken = write(&dir, "broken.json", r#"[{"name":"x","lambda":0.5}]"#);
    assert_eq!(code(&run(&["check", "--corpus", s(&broken)])), 4);
    let mixed = write(
        &dir,
        "mixed.json",
        &format!(
            r#"[{{"name":"m","k":{},"l":{{"kind":"ball","dim":3,"params":{{"radius":1}}}},"lambda":0.5,"samples":1000,"seed":1}}]"#,
            box_(1.0)
        ),
    );
    assert_eq!(code(&run(&["check", "--corpus", s(&mixed)])), 5);
}
