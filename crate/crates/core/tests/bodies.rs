use gbm_core::bodies::BodyDoc;
use gbm_core::{Body, Direction, GbmError};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Direction {
    Direction::normalized(&normal_vec(rng, n)).unwrap()
}

/// Exact kinds (no direction net involved) with randomised parameters.
fn exact_body(rng: &mut ChaCha8Rng, n: usize) -> Body {
    match rng.random_range(0..5u32) {
        0 => Body::ball(n, rng.random_range(0.3..2.0)).unwrap(),
        1 => Body::cuboid((0..n).map(|_| rng.random_range(0.2..2.0)).collect()).unwrap(),
        2 => Body::ellipsoid((0..n).map(|_| rng.random_range(0.3..2.0)).collect()).unwrap(),
        3 => {
            let k = rng.random_range(n..=6);
            Body::sym_polytope((0..k).map(|_| normal_vec(rng, n)).collect()).unwrap()
        }
        _ => Body::cross_polytope(n, rng.random_range(0.5..2.0)).unwrap(),
    }
}

fn body_strategy() -> impl Strategy<Value = (Body, u64)> {
    (2usize..=4, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (exact_body(&mut rng, n), seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetric_bodies_are_exactly_symmetric((body, seed) in body_strategy()) {
        let n = body.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..200 {
            let th = random_direction(&mut rng, n);
            prop_assert_eq!(body.support(&th).unwrap(), body.support(&th.neg()).unwrap());
            let x: Vec<f64> = normal_vec(&mut rng, n);
            let mx: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert_eq!(body.contains(&x).unwrap(), body.contains(&mx).unwrap());
        }
    }

    #[test]
    fn membership_respects_support((body, seed) in body_strategy()) {
        let n = body.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let dirs: Vec<Direction> = (0..64).map(|_| random_direction(&mut rng, n)).collect();
        for _ in 0..100 {
            let x: Vec<f64> = normal_vec(&mut rng, n);
            if body.contains(&x).unwrap() {
                for th in &dirs {
                    let dot: f64 = x.iter().zip(th.as_slice()).map(|(a, b)| a * b).sum();
                    prop_assert!(dot <= body.support(th).unwrap() + 1e-9);
                }
            }
        }
    }

    #[test]
    fn support_is_sublinear((body, seed) in body_strategy()) {
        let n = body.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51b);
        for _ in 0..100 {
            let (a, b) = (normal_vec(&mut rng, n), normal_vec(&mut rng, n));
            let t: f64 = rng.random_range(0.0..1.0);
            let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
            let bound = t * body.support_vec(&a) + (1.0 - t) * body.support_vec(&b);
            prop_assert!(body.support_vec(&mix) <= bound + 1e-9 * (1.0 + bound.abs()));
        }
    }

    #[test]
    fn minkowski_support_is_linear((k, seed) in body_strategy(), lambda in 0.05f64..0.95) {
        let n = k.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1111);
        let l = exact_body(&mut rng, n);
        let m = Body::minkowski_combine(lambda, &k, &l).unwrap();
        for _ in 0..50 {
            let th = random_direction(&mut rng, n);
            let expect = lambda * k.support(&th).unwrap() + (1.0 - lambda) * l.support(&th).unwrap();
            let got = m.support(&th).unwrap();
            prop_assert!((got - expect).abs() <= 1e-12 * (1.0 + expect), "{got} vs {expect}");
        }
    }

    #[test]
    fn star_shape_is_preserved((body, seed) in body_strategy()) {
        let n = body.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x57a);
        let u = Body::union(vec![body.clone(), exact_body(&mut rng, n)]).unwrap();
        for b in [&body, &u] {
            for _ in 0..50 {
                let x: Vec<f64> = normal_vec(&mut rng, n);
                if b.contains(&x).unwrap() {
                    for _ in 0..20 {
                        let t: f64 = rng.random_range(0.0..=1.0);
                        let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
                        prop_assert!(b.contains(&tx).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn json_round_trip_is_byte_identical((body, seed) in body_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x10);
        let other = exact_body(&mut rng, body.dim());
        for b in [body.clone(), Body::minkowski_combine(0.3, &body, &other).unwrap(), Body::dilate(1.7, &body).unwrap()] {
            let text = b.to_json();
            let parsed = Body::from_json(&text).unwrap();
            prop_assert_eq!(parsed.to_json(), text.clone());
            let doc: BodyDoc = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(doc.to_canonical_json(), text);
        }
    }
}

#[test]
fn dilated_geometric_mean_sits_inside_the_combination() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..6 {
        let n = 2 + case % 2;
        let k = exact_body(&mut rng, n);
        let l = exact_body(&mut rng, n);
        let lambda = 0.3 + 0.1 * case as f64;
        let m = Body::minkowski_combine(lambda, &k, &l).unwrap();
        for p in [0.25, 0.5, 0.75] {
            let tp = (lambda / p).powf(p) * ((1.0 - lambda) / (1.0 - p)).powf(1.0 - p);
            let g = Body::geometric_mean(p, &k, &l).unwrap();
            let d = Body::dilate(tp, &g).unwrap();
            // Net-based membership over-includes by at most this relative amount.
            let slack = 1.0 + 4.0 * g.net_resolution().unwrap_or(0.0) * g.outer_radius() / g.inner_radius();
            for _ in 0..300 {
                let x: Vec<f64> = normal_vec(&mut rng, n);
                if d.contains(&x).unwrap() {
                    let shrunk: Vec<f64> = x.iter().map(|v| v / slack).collect();
                    assert!(m.contains(&shrunk).unwrap(), "case {case}, p = {p}, x = {x:?}");
                }
            }
        }
    }
}

#[test]
fn directions_are_unit() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 1..=6 {
        let th = random_direction(&mut rng, n);
        let norm: f64 = th.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }
    assert!(Direction::new(vec![1.0, 1.0]).is_err());
}

#[test]
fn degenerate_inputs_are_rejected() {
    let k = Body::ball(2, 1.0).unwrap();
    assert!(Body::cuboid(vec![1.0, 0.0]).is_err());
    assert!(Body::ball(2, 0.0).is_err());
    assert!(Body::minkowski_combine(0.0, &k, &k).is_err());
    assert!(Body::minkowski_combine(1.0, &k, &k).is_err());
    let k3 = Body::ball(3, 1.0).unwrap();
    assert!(matches!(
        Body::minkowski_combine(0.5, &k, &k3),
        Err(GbmError::DimensionMismatch { expected: 2, got: 3 })
    ));
    assert!(Body::from_json(r#"{"kind":"ball","dim":2,"params":{"radius":1.0},"extra":1}"#).is_err());
}

#[test]
fn truncated_slab_has_the_cylinder_cap() {
    let s = Body::truncated_slab(2, 0.1).unwrap();
    let cap = 2.0f64; // √(2n) at n = 2
    assert!(s.contains(&[0.09, 1.99]).unwrap());
    assert!(!s.contains(&[0.11, 0.0]).unwrap());
    assert!(!s.contains(&[0.0, cap + 1e-6]).unwrap());
}
