use radlog_core::diagnostics::{decay_exponent, decay_exponent_in, newtonian_comparison, norms, DecayWindow};
use radlog_core::logistic::minimal_maximal_pair;
use radlog_core::*;

fn conformal_weight() -> Potential {
    Potential::rational_decay(1.0, 2.0, 0.0, 1.0).with_decay_bound(1.0, 2.0)
}

fn coarse() -> SolveOptions {
    SolveOptions {
        nodes_per_unit: 32,
        ..Default::default()
    }
}

// Λ for (1+r²)^{-2} in three dimensions: (1+r²)^{-1/2} solves -Δφ = 3Vφ.
const LAMBDA: f64 = 3.0;

#[test]
fn minimal_below_maximal_and_below_the_constant_bound() {
    let v = Potential::gaussian_bump(2.0);
    let f = AbsorptionTerm::power(3.0);
    let g = RadialGrid::new(3, 4.0, 255).unwrap();
    let l1 = principal_weighted(&g, &v, EigenOptions::default()).unwrap().lambda1;
    let (lo, hi) = minimal_maximal_pair(&g, &v, &f, 1.5 * l1, &SolveOptions::default()).unwrap();
    for (a, b) in lo.values.iter().zip(&hi.values) {
        assert!(a <= &(b + 1e-12));
    }
    for p in [&lo, &hi] {
        assert!(p.values.iter().all(|&u| (0.0..=p.upper_bound).contains(&u)));
        assert!(p.residual <= 1e-8);
        assert_eq!(p.monotonicity_violations, 0);
    }
}

#[test]
fn sweep_separates_extinction_from_persistence() {
    let lambdas: Vec<f64> = [0.5, 0.9, 1.1, 1.5].iter().map(|s| s * LAMBDA).collect();
    // Large enough balls that λ₁(R) < 1.1 Λ at the end of the schedule.
    let table = bifurcation_sweep(
        3,
        &conformal_weight(),
        &AbsorptionTerm::power(2.0),
        &lambdas,
        &[8.0, 16.0, 32.0, 64.0],
        &coarse(),
    )
    .unwrap();
    let flags: Vec<bool> = table.rows.iter().map(|r| r.exists).collect();
    assert_eq!(flags, [false, false, true, true]);
    let emp = table.empirical_threshold.unwrap();
    assert!((emp - LAMBDA).abs() < 0.11 * LAMBDA, "{emp}");
    assert!(table
        .rows
        .iter()
        .filter(|r| r.exists)
        .all(|r| r.activation_radius.is_some()));
}

#[test]
fn half_threshold_is_extinct_on_every_ball() {
    let out = solve_entire(
        3,
        &conformal_weight(),
        &AbsorptionTerm::power(2.0),
        0.5 * LAMBDA,
        &[4.0, 8.0, 16.0, 32.0],
        &coarse(),
    )
    .unwrap();
    match out {
        EntireOutcome::Extinct(stages) => assert_eq!(stages.len(), 4),
        other => panic!("{other:?}"),
    }
}

fn entire(schedule: &[f64], opts: &SolveOptions) -> EntireSolution {
    match solve_entire(
        3,
        &conformal_weight(),
        &AbsorptionTerm::power(2.0),
        1.5 * LAMBDA,
        schedule,
        opts,
    )
    .unwrap()
    {
        EntireOutcome::Solution(s) => *s,
        other => panic!("{other:?}"),
    }
}

#[test]
fn stage_deltas_shrink_and_comparisons_hold() {
    let s = entire(&[4.0, 8.0, 16.0, 32.0], &coarse());
    let d = s.deltas();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    assert!(s.supersolution.unwrap().holds);
    let p = &s.final_profile;
    let cmp = newtonian_comparison(&p.grid, &p.values, &conformal_weight(), s.lambda).unwrap();
    assert!(cmp.holds, "{cmp:?}");
    // Truncation ratios approach 1 as the balls grow; the r^{-2} tail makes
    // the deficit shrink like 1/R.
    let deviations: Vec<f64> = s
        .active_profiles()
        .map(|p| {
            let n = norms(&p.grid, &p.values, &conformal_weight(), &AbsorptionTerm::power(2.0)).unwrap();
            assert!(n.all_finite());
            n.max_ratio_deviation()
        })
        .collect();
    assert!(deviations.windows(2).all(|w| w[1] < w[0]), "{deviations:?}");
    assert!(deviations[deviations.len() - 1] < 0.1, "{deviations:?}");
}

#[test]
fn tail_decays_no_slower_than_the_fundamental_solution() {
    // For f = u² in three dimensions the tail solves Δu ≈ λu², whose
    // positive decaying solutions behave like (2/λ) r^{-2}: faster than r^{2-N}.
    let s = entire(
        &[4.0, 8.0, 16.0, 32.0, 64.0],
        &SolveOptions {
            nodes_per_unit: 64,
            ..Default::default()
        },
    );
    let p = &s.final_profile;
    let outer = decay_exponent(&p.grid, &p.values).unwrap();
    assert!(outer.slope <= outer.target + 0.1, "{outer:?}");
    let inner = decay_exponent_in(&p.grid, &p.values, DecayWindow { start: 0.25, end: 0.5 }).unwrap();
    assert!((inner.slope + 2.0).abs() < 0.15, "{inner:?}");
}

#[test]
fn decay_fit_is_insensitive_to_window_shifts_in_the_asymptotic_regime() {
    let g = RadialGrid::new(3, 50.0, 4999).unwrap();
    let u = g.sample(|r| (1.0 + 0.5 / r) / r);
    let base = decay_exponent(&g, &u).unwrap().slope;
    for factor in [0.9, 1.05] {
        let shifted = decay_exponent_in(&g, &u, DecayWindow::default().shifted(factor))
            .unwrap()
            .slope;
        assert!((shifted - base).abs() < 0.05, "{base} vs {shifted}");
    }
}
