use gbm_core::checks::{
    check_b_variance, check_ball_second_moment, check_brascamp_lieb, check_dilate_lemma, check_dim_bm,
    check_ehrhard, check_equality_case, check_exponent_optimality, check_geomean_chain, check_log_concavity,
    check_sigma_refinement, check_xi_profile, corpus_to_json, generate_corpus, load_corpus, odd_cubic_family,
    run_corpus, write_csv_summary, write_jsonl, CheckKind, CorpusOptions, CHECK_TABLE_R_MAX, DEFAULT_CORPUS_SEED,
    DEFAULT_CORPUS_SIZE,
};
use gbm_core::sigma::DEFAULT_NODES;
use gbm_core::{Body, CheckCase, SamplingBudget, SigmaTable, Verdict};
use proptest::prelude::*;

const CORPUS: &str = include_str!("../data/corpus.json");

/// `Φ(a) − Φ(−a)` by composite Simpson on the density, independent of the library's Φ.
fn interval_mass(a: f64) -> f64 {
    let m = 20_000;
    let h = 2.0 * a / m as f64;
    let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(-a) + f(a);
    for i in 1..m {
        s += f(-a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn square_mass(a: f64) -> f64 {
    interval_mass(a).powi(2)
}

proptest! {
    #[test]
    fn verdict_bands(s in -50.0f64..50.0) {
        let v = Verdict::from_sigmas(s);
        prop_assert_eq!(v == Verdict::Holds, s >= -3.0);
        prop_assert_eq!(v == Verdict::Violated, s <= -5.0);
    }
}

#[test]
fn boxes_example() {
    let k = Body::cube(2, 1.0).unwrap();
    let l = Body::cube(2, 2.0).unwrap();
    let r = check_dim_bm(&CheckCase::new("boxes", k, l, 0.5, SamplingBudget::new(1, 0))).unwrap();
    let lhs = square_mass(1.5).sqrt();
    let rhs = 0.5 * square_mass(1.0).sqrt() + 0.5 * square_mass(2.0).sqrt();
    assert!((lhs - 0.866386).abs() < 1e-6 && (rhs - 0.818594).abs() < 1e-6);
    assert!((r.lhs.value - lhs).abs() < 1e-10 && (r.rhs.value - rhs).abs() < 1e-10);
    assert!(r.exact && r.verdict == Verdict::Holds);
}

#[test]
fn exponent_optimality_example() {
    let e = 0.75;
    let lhs = square_mass(0.015).powf(e);
    let rhs = 0.5 * square_mass(0.01).powf(e) + 0.5 * square_mass(0.02).powf(e);
    assert!((lhs - 1.31e-3).abs() < 5e-6, "{lhs}");
    assert!((rhs - 1.365e-3).abs() < 5e-6, "{rhs}");
    let k = Body::cube(2, 0.01).unwrap();
    let l = Body::cube(2, 0.02).unwrap();
    let case = CheckCase::new("q", k, l, 0.5, SamplingBudget::new(1, 0)).with_delta(1.5);
    let r = check_dim_bm(&case).unwrap();
    assert!((r.lhs.value - lhs).abs() < 1e-12 && (r.rhs.value - rhs).abs() < 1e-12);
    assert_eq!(r.verdict, Verdict::Violated);
    let found = check_exponent_optimality(2, 1.5).unwrap();
    assert_eq!(found.check, CheckKind::ExponentOptimality);
    assert!(found.exact && found.margin_sigmas <= -5.0);
    assert!(check_exponent_optimality(2, 1.0).is_err());
}

#[test]
fn identical_bodies_give_zero_margin() {
    let table = SigmaTable::build(3, CHECK_TABLE_R_MAX, DEFAULT_NODES).unwrap();
    let bodies = [
        Body::ball(3, 1.0).unwrap(),
        Body::cuboid(vec![0.5, 1.0, 1.5]).unwrap(),
        Body::cross_polytope(3, 1.3).unwrap(),
    ];
    for (i, k) in bodies.iter().enumerate() {
        for lambda in [0.25, 0.5, 0.75] {
            let case = CheckCase::new("same", k.clone(), k.clone(), lambda, SamplingBudget::new(200_000, i as u64));
            let rs = [
                check_dim_bm(&case).unwrap(),
                check_ehrhard(&case).unwrap(),
                check_log_concavity(&case).unwrap(),
                check_sigma_refinement(&case, &table).unwrap().sigma,
            ];
            for r in rs {
                assert!(r.margin_sigmas.abs() <= 1.0, "{i}: {:?}", r.check);
                if r.exact {
                    assert_eq!(r.margin, 0.0, "{i}: {:?}", r.check);
                }
            }
        }
    }
}

#[test]
fn ehrhard_is_tight_on_parallel_halfspaces() {
    for (a, b, lambda) in [(0.3, -0.8, 0.5), (1.2, 0.4, 0.25), (-1.0, 2.0, 0.7)] {
        let k = Body::halfspace(vec![0.6, -0.8], a).unwrap();
        let l = Body::halfspace(vec![0.6, -0.8], b).unwrap();
        let r = check_ehrhard(&CheckCase::new("h", k, l, lambda, SamplingBudget::new(1, 0))).unwrap();
        assert!(r.margin.abs() <= 1e-9, "{}", r.margin);
        assert!((r.lhs.value - (lambda * a + (1.0 - lambda) * b)).abs() <= 1e-9);
    }
}

#[test]
fn verdicts_are_scale_coherent() {
    let cases = load_corpus(CORPUS).unwrap();
    for c in cases.iter().take(50) {
        let mut c = c.clone();
        c.samples = 500_000;
        let base = check_dim_bm(&c).unwrap().verdict;
        for a in [0.5, 2.0] {
            let mut s = c.clone();
            s.k = Body::dilate(a, &c.k).unwrap();
            s.l = c.l.as_ref().map(|l| Body::dilate(a, l).unwrap());
            assert_eq!(check_dim_bm(&s).unwrap().verdict, base, "{} at {a}", c.name);
        }
    }
}

#[test]
fn chain_dominance_on_corpus_pairs() {
    let cases = load_corpus(CORPUS).unwrap();
    let tables: Vec<SigmaTable> =
        (2..=4).map(|n| SigmaTable::build(n, CHECK_TABLE_R_MAX, DEFAULT_NODES).unwrap()).collect();
    for c in cases.iter().skip(50).take(45) {
        let mut c = c.clone();
        c.samples = 100_000;
        let r = check_sigma_refinement(&c, &tables[c.dim() - 2]).unwrap();
        assert!(r.chain_holds, "{}", c.name);
        if r.sigma.margin >= 0.0 {
            assert!(r.dim.margin >= -1e-9, "{}", c.name);
        }
    }
}

#[test]
fn equality_case_trend() {
    let k = Body::cuboid(vec![0.8, 1.3]).unwrap();
    let rep = check_equality_case(&k, 0.5, &[0.0, 0.05, 0.1, 0.2, 0.4], SamplingBudget::new(400_000, 3)).unwrap();
    assert!(rep.nonnegative && rep.monotone && rep.vanishes_at_zero, "{rep:?}");
    assert_eq!(rep.results[0].margin, 0.0);
}

#[test]
fn ball_second_moment_examples() {
    let b = SamplingBudget::new(400_000, 17);
    let ball = check_ball_second_moment(&Body::ball(2, 1.3).unwrap(), b).unwrap();
    assert!(ball.exact && ball.margin.abs() < 1e-10);
    let bx = check_ball_second_moment(&Body::cuboid(vec![2.0, 0.3]).unwrap(), b).unwrap();
    assert!(bx.margin > 0.0 && bx.verdict == Verdict::Holds);
    let cross = Body::dilate(0.8, &Body::cross_polytope(3, 1.5).unwrap()).unwrap();
    assert!(check_ball_second_moment(&cross, b).unwrap().margin_sigmas >= -3.0);
}

#[test]
fn dilate_lemma_is_tight_on_balls() {
    let t = [0.2, 0.5, 0.9, 1.0];
    for r in check_dilate_lemma(&Body::ball(3, 1.1).unwrap(), &t, SamplingBudget::new(1, 0)).unwrap() {
        assert!(r.exact && r.margin.abs() < 1e-12, "{}", r.margin);
    }
    let star = Body::union(vec![Body::cuboid(vec![1.5, 0.2]).unwrap(), Body::cuboid(vec![0.2, 1.5]).unwrap()]).unwrap();
    for r in check_dilate_lemma(&star, &t, SamplingBudget::new(200_000, 4)).unwrap() {
        assert_eq!(r.verdict, Verdict::Holds, "{}", r.name);
    }
    assert!(check_dilate_lemma(&star, &[0.0], SamplingBudget::new(1000, 1)).is_err());
}

#[test]
fn variance_bounds_hold() {
    let k = Body::cross_polytope(3, 1.4).unwrap();
    let budget = SamplingBudget::new(200_000, 8);
    assert_eq!(check_b_variance(&k, budget).unwrap().verdict, Verdict::Holds);
    let fam = odd_cubic_family(3, 5, 2);
    for r in check_brascamp_lieb(&k, &fam, budget).unwrap() {
        assert_eq!(r.verdict, Verdict::Holds, "{}", r.name);
        assert!(r.margin > 0.0);
    }
}

#[test]
fn xi_profiles() {
    let fine: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
    let exact_budget = SamplingBudget::new(1, 0);
    let ball = check_xi_profile(&Body::ball(2, 1.0).unwrap(), &fine, exact_budget).unwrap();
    assert!(ball.exact && ball.affine && ball.concavity_violations.is_empty());
    let cube = check_xi_profile(&Body::cube(2, 1.0).unwrap(), &fine, exact_budget).unwrap();
    assert!(cube.exact && cube.concavity_violations.len() == fine.len() - 2, "{}", cube.summary);
    let coarse: Vec<f64> = (1..=6).map(|i| 0.5 * i as f64).collect();
    let cross = Body::cross_polytope(3, 1.0).unwrap();
    let rep = check_xi_profile(&cross, &coarse, SamplingBudget::new(1_000_000, 6)).unwrap();
    assert!(!rep.exact && !rep.affine && !rep.concavity_violations.is_empty(), "{}", rep.summary);
}

#[test]
fn geomean_chain_in_the_plane() {
    let k = Body::cuboid(vec![1.2, 0.5]).unwrap();
    let l = Body::ellipsoid(vec![0.6, 1.4]).unwrap();
    let rep = check_geomean_chain(&k, &l, 0.4, &[0.2, 0.4, 0.6, 0.8], SamplingBudget::new(200_000, 12)).unwrap();
    assert_eq!(rep.chain.verdict, Verdict::Holds);
    assert_eq!(rep.direct.verdict, Verdict::Holds);
    assert!(!rep.direct.notes.is_empty());
    let k3 = Body::ball(3, 1.0).unwrap();
    assert!(check_geomean_chain(&k3, &k3, 0.5, &[0.5], SamplingBudget::new(1000, 1)).is_err());
}

#[test]
fn checked_in_corpus_regenerates() {
    let regenerated = generate_corpus(DEFAULT_CORPUS_SEED, DEFAULT_CORPUS_SIZE, 1_000_000).unwrap();
    assert_eq!(corpus_to_json(&regenerated), CORPUS);
    let cases = load_corpus(CORPUS).unwrap();
    assert_eq!(cases.len(), DEFAULT_CORPUS_SIZE);
    assert!(cases.iter().all(|c| c.validate(true).is_ok()));
}

#[test]
fn corpus_reports_are_deterministic() {
    let mut cases = load_corpus(CORPUS).unwrap();
    cases.truncate(9);
    for c in &mut cases {
        c.samples = 50_000;
    }
    let opts = CorpusOptions { lemmas: true, bl_functions: 2 };
    let render = |threads: usize, cases: &[CheckCase]| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let out = pool.install(|| run_corpus(cases, opts)).unwrap();
        let (mut jsonl, mut csv) = (Vec::new(), Vec::new());
        write_jsonl(&out, &mut jsonl).unwrap();
        write_csv_summary(&out, &mut csv).unwrap();
        (jsonl, csv, out.theorem_violations)
    };
    let a = render(1, &cases);
    let mut reversed = cases.clone();
    reversed.reverse();
    let b = render(3, &reversed);
    assert_eq!(a, b);
    assert_eq!(a.2, 0);
}
