use gbm_core::localpde::{
    kl_functional, kl_lower_bound, ou_apply, radial_functional, radial_solution, slab_experiment, solve_dirichlet,
    BoundaryData, MaskedGrid, NodeClass, DEFAULT_TOLERANCE,
};
use gbm_core::{Body, SamplingBudget};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn planar_body(seed: u64) -> Body {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match rng.random_range(0..4u32) {
        0 => Body::ball(2, rng.random_range(0.6..1.5)).unwrap(),
        1 => Body::cuboid(vec![rng.random_range(0.5..1.4), rng.random_range(0.5..1.4)]).unwrap(),
        2 => Body::ellipsoid(vec![rng.random_range(0.5..1.5), rng.random_range(0.5..1.5)]).unwrap(),
        _ => {
            let k = rng.random_range(2..=5);
            let v = (0..k)
                .map(|i| {
                    let a = std::f64::consts::PI * (i as f64 + rng.random_range(0.0..0.6)) / k as f64;
                    let r = rng.random_range(0.7..1.4);
                    vec![r * a.cos(), r * a.sin()]
                })
                .collect();
            Body::sym_polytope(v).unwrap()
        }
    }
}

fn weighted_dot(g: &MaskedGrid, a: &[f64], b: &[f64]) -> f64 {
    g.interior_nodes().iter().map(|&k| g.gauss_weight[k] * a[k] * b[k]).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ou_operator_is_self_adjoint(seed in any::<u64>()) {
        let body = planar_body(seed);
        let g = MaskedGrid::new(&body, 0.08).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mut u = vec![0.0; g.len()];
        let mut v = vec![0.0; g.len()];
        for &k in g.interior_nodes() {
            u[k] = rng.random_range(-1.0..1.0);
            v[k] = rng.random_range(-1.0..1.0);
        }
        let lu = ou_apply(&u, &g).unwrap();
        let lv = ou_apply(&v, &g).unwrap();
        let (a, b) = (weighted_dot(&g, &lu, &v), weighted_dot(&g, &u, &lv));
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
        // Dirichlet form: −⟨𝓛u, u⟩ ≥ 0.
        prop_assert!(weighted_dot(&g, &lu, &u) <= 1e-12);
    }

    #[test]
    fn even_data_give_even_solutions(seed in any::<u64>(), which in 0usize..3) {
        let body = planar_body(seed);
        let bc = BoundaryData::standard_family()[which];
        let s = solve_dirichlet(&body, |_, _| 1.0, bc, 0.05).unwrap();
        prop_assert!(s.residual_linf <= DEFAULT_TOLERANCE);
        prop_assert!(s.asymmetry <= 1e-9, "{}", s.asymmetry);
        let rep = kl_functional(&s);
        prop_assert!((rep.total - rep.hessian_term - rep.gradient_term).abs() <= 1e-12 * rep.total);
        let d = &rep.decomposition;
        prop_assert!((rep.hessian_term - d.traceless_term - d.laplacian_term).abs() <= 1e-9 * rep.hessian_term);
        prop_assert!(rep.brascamp_lieb.traceless_lhs >= rep.brascamp_lieb.rhs - 1e-3);
    }
}

#[test]
fn masks_are_symmetric_and_closed() {
    for seed in 0..8 {
        let g = MaskedGrid::new(&planar_body(seed), 0.05).unwrap();
        for k in 0..g.len() {
            assert_eq!(g.mask[k], g.mask[g.mirror(k)]);
        }
        for &k in g.interior_nodes() {
            let (i, j) = (k % g.width(), k / g.width());
            for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let nb = ((j as i64 + dj) as usize) * g.width() + (i as i64 + di) as usize;
                assert_ne!(g.mask[nb], NodeClass::Exterior);
            }
        }
    }
}

#[test]
fn disk_lattice_measure_converges() {
    let exact = 1.0 - (-0.5f64).exp();
    let disk = Body::ball(2, 1.0).unwrap();
    for h in [0.04, 0.02, 0.01] {
        let m = MaskedGrid::new(&disk, h).unwrap().lattice_measure();
        assert!((m - exact).abs() < 0.5 * h, "h = {h}: {m}");
    }
}

fn disk_pointwise_error(h: f64) -> f64 {
    let disk = Body::ball(2, 1.0).unwrap();
    let s = solve_dirichlet(&disk, |_, _| 1.0, BoundaryData::Zero, h).unwrap();
    let nodes = s.grid.interior_nodes();
    let mut radii: Vec<f64> = nodes
        .iter()
        .map(|&k| {
            let (x, y) = s.grid.position(k);
            (x * x + y * y).sqrt()
        })
        .collect();
    radii.push(1.0);
    let mut grid = radii.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let prof = radial_solution(2, 1.0, &grid).unwrap();
    let at_one = *prof.u.last().unwrap();
    nodes
        .iter()
        .zip(&radii)
        .map(|(&k, r)| {
            let i = grid.binary_search_by(|g| g.total_cmp(r)).unwrap();
            (s.u[k] - (prof.u[i] - at_one)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn disk_solution_converges_to_the_radial_form() {
    let (e1, e2) = (disk_pointwise_error(0.04), disk_pointwise_error(0.02));
    assert!(e2 <= 0.625 * e1, "{e1:e} → {e2:e}");
    assert!(e2 < 1e-3);
}

#[test]
fn radial_functional_exceeds_one_over_n() {
    for n in 1..=10 {
        assert!((radial_functional(n, 1e-3) - 1.0 / n as f64).abs() <= 1e-4);
        assert!(radial_functional(n, 2.0) > 1.0 / n as f64);
    }
    let p = radial_solution(3, 1.5, &[0.0, 0.5, 1.0, 1.5]).unwrap();
    assert!(p.ode_residual < 1e-10);
}

#[test]
fn slab_bounds_at_a_tenth() {
    let r = slab_experiment(2, 0.1, 17).unwrap();
    // 36 e^{ε²/2} ε² at ε = 0.1.
    assert!((r.poincare_bound - 0.361_804).abs() < 1e-5);
    assert!(r.poincare_holds && r.gradient_energy < 0.1 * r.poincare_bound, "{r:?}");
    assert!(r.g_value >= r.lower_bound - 1e-3);
    assert!((r.g_value - r.g_split).abs() < 1e-3, "{} vs {}", r.g_value, r.g_split);
    assert!(slab_experiment(2, 0.1, 8).is_err());
    assert!(slab_experiment(3, 0.1, 17).is_err());
}

#[test]
fn kl_lower_bound_on_a_ball() {
    // ∫_{B} 1/(|x|²+2) dγ₂ / γ₂(B) by the radial integral.
    let gl = gbm_core::numeric::GaussLegendre::new(40);
    let num = gl.integrate(0.0, 1.0, |r| r * (-0.5 * r * r).exp() / (r * r + 2.0));
    let den = 1.0 - (-0.5f64).exp();
    let got = kl_lower_bound(&Body::ball(2, 1.0).unwrap(), SamplingBudget::new(1, 0)).unwrap();
    assert!((got.value - num / den).abs() < 1e-12);
    let poly = Body::cross_polytope(2, 1.0).unwrap();
    let mc = kl_lower_bound(&poly, SamplingBudget::new(200_000, 5)).unwrap();
    assert!(mc.value > 1.0 / 3.0 && mc.value < 0.5);
}
