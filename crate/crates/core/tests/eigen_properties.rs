use proptest::prelude::*;
use radlog_core::*;

fn admissible_weight() -> impl Strategy<Value = Potential> {
    (0.5..2.0f64, 1.2..3.0f64, 0.0..0.9f64, 0.5..3.0f64)
        .prop_map(|(a, p, b, q)| Potential::rational_decay(a, p, b * a, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rayleigh_quotient_never_beats_lambda1(v in admissible_weight(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let g = RadialGrid::new(3, 6.0, 200).unwrap();
        let res = principal_weighted(&g, &v, EigenOptions::default()).unwrap();
        let pencil = Pencil::new(&g, &v);
        let form = StiffnessForm::new(std::sync::Arc::new(g.clone()));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let top = res.phi1.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut tried = 0;
        for _ in 0..10_000 {
            let t = rng.gen_range(0.0..2.0) * top;
            let x: Vec<f64> = res.phi1.iter().map(|p| p + t * rng.gen_range(-1.0..1.0)).collect();
            let b: f64 = x.iter().zip(pencil.weight()).map(|(p, w)| w * p * p).sum();
            if b <= 0.0 {
                continue;
            }
            let a = form.bilinear(&x, &x).unwrap();
            prop_assert!(a / b >= res.lambda1 * (1.0 - 1e-10));
            tried += 1;
            if tried == 100 {
                break;
            }
        }
        prop_assert_eq!(tried, 100);
    }

    #[test]
    fn principal_eigenvector_has_one_sign(v in admissible_weight()) {
        let g = RadialGrid::new(3, 8.0, 300).unwrap();
        let res = principal_weighted(&g, &v, EigenOptions::default()).unwrap();
        let top = res.phi1.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        prop_assert!(res.phi1.iter().all(|&x| x >= -1e-8 * top));
    }

    #[test]
    fn shifted_sign_tracks_lambda1(v in admissible_weight(), factor in 0.3..3.0f64) {
        let g = RadialGrid::new(3, 5.0, 160).unwrap();
        let l1 = principal_weighted(&g, &v, EigenOptions::default()).unwrap().lambda1;
        prop_assume!((factor - 1.0).abs() > 1e-3);
        let mu = principal_shifted(&g, &v, factor * l1, EigenOptions::default()).unwrap().mu1;
        prop_assert_eq!(mu < 0.0, factor > 1.0);
    }

    #[test]
    fn dense_oracle_agrees_on_shifted_problem(v in admissible_weight(), factor in 0.3..3.0f64) {
        let g = RadialGrid::new(3, 4.0, 128).unwrap();
        let l1 = principal_weighted(&g, &v, EigenOptions::default()).unwrap().lambda1;
        let it = principal_shifted(&g, &v, factor * l1, EigenOptions::default()).unwrap().mu1;
        let dense = dense_oracle(&g, &v, OracleProblem::Shifted { lambda: factor * l1 }).unwrap();
        let scale = factor * l1 * v.sup_norm();
        prop_assert!((it - dense.eigenvalues[0]).abs() <= 1e-8 * scale.max(it.abs()));
    }
}

#[test]
fn lambda1_decreases_along_radius_schedule() {
    let v = Potential::gaussian_bump(1.5);
    let curve = lambda_curve(3, &v, &[1.0, 1.5, 2.0, 3.0, 4.0, 6.0], 128, EigenOptions::default()).unwrap();
    for w in curve.entries.windows(2) {
        assert!(w[1].lambda1 < w[0].lambda1, "{w:?}");
    }
}

#[test]
fn higher_dimensions_match_bessel_zeros() {
    // First Dirichlet eigenvalue of the unit ball in 5D: j_{3/2,1}² ≈ 20.1907.
    let g = RadialGrid::new(5, 1.0, 2048).unwrap();
    let l = principal_weighted(&g, &Potential::constant(1.0), EigenOptions::default())
        .unwrap()
        .lambda1;
    assert!((l - 4.493_409_457_909_064_f64.powi(2)).abs() < 1e-3, "{l}");
}

#[test]
fn refinement_bracket_contains_the_continuum_value() {
    let g = RadialGrid::new(3, 1.0, 255).unwrap();
    let b = radlog_core::eigen::refinement_bracket(&g, &Potential::constant(1.0), EigenOptions::default()).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    assert!(b.low <= pi2 && pi2 <= b.high, "{b:?}");
    assert!((b.extrapolated - pi2).abs() < 1e-6, "{b:?}");
}
