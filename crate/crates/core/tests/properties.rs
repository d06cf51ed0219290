//! Property tests for the numerical invariants of each module.

use minepool::model::CompensatedSum;
use minepool::optimizer::objective;
use minepool::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INV_E: f64 = 1.0 / std::f64::consts::E;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn deu_is_linear(
        a in prop::collection::vec(-1.0f64..1.0, 1..10_000),
        b_seed in any::<u64>(),
        s in -3.0f64..3.0,
        t in -3.0f64..3.0,
        delta in 0.01f64..0.9999,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(b_seed);
        let b: Vec<f64> = a.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| s * x + t * y).collect();
        let lhs = deu(&mix, delta).unwrap();
        let rhs = s * deu(&a, delta).unwrap() + t * deu(&b, delta).unwrap();
        let abs_a: Vec<f64> = a.iter().map(|x| x.abs()).collect();
        let abs_b: Vec<f64> = b.iter().map(|x| x.abs()).collect();
        let scale = s.abs() * deu(&abs_a, delta).unwrap() + t.abs() * deu(&abs_b, delta).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn deu_is_bounded(a in prop::collection::vec(0.0f64..5.0, 1..2000), delta in 0.01f64..0.9999) {
        let v = deu(&a, delta).unwrap();
        let top = a.iter().cloned().fold(0.0, f64::max);
        prop_assert!(v >= 0.0);
        prop_assert!(v <= top / (1.0 - delta) * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn power_utility_is_concave(alpha in 0.01f64..=1.0, x in 0.0f64..1e6, y in 0.0f64..1e6, t in 0.0f64..=1.0) {
        let u = UtilityFunction::power(alpha).unwrap();
        let lhs = u.eval(t * x + (1.0 - t) * y).unwrap();
        let rhs = t * u.eval(x).unwrap() + (1.0 - t) * u.eval(y).unwrap();
        let scale = u.eval(x.max(y)).unwrap().max(1.0);
        prop_assert!(lhs >= rhs - 1e-12 * scale);
    }

    #[test]
    fn lower_branch_round_trips(frac in 1e-12f64..1.0) {
        let x = -INV_E * frac;
        let w = lambert_w_minus1(x).unwrap();
        prop_assert!(w.value <= -1.0);
        prop_assert!((w.value * w.value.exp() - x).abs() <= 1e-12);
    }

    #[test]
    fn principal_branch_inverts_alpha(alpha in 0.0001f64..0.999) {
        let w = lambert_w_principal(-alpha * (-alpha).exp()).unwrap().value;
        prop_assert!((w + alpha).abs() <= 1e-10, "alpha={} w={}", alpha, w);
    }

    #[test]
    fn built_in_rules_are_valid(
        kind in 0u8..3,
        n in 1u64..100_000,
        r in 0.0001f64..0.9999,
        shrink in 0.0f64..=1.0,
        i in 0usize..200_000,
    ) {
        let rule = match kind {
            0 => AllocationRule::Solo,
            1 => AllocationRule::pplns(n).unwrap(),
            _ => AllocationRule::geometric(((1.0 - r) * shrink).max(1e-300), r).unwrap(),
        };
        prop_assert!(rule.mass().unwrap() <= 1.0 + 1e-12);
        prop_assert!(rule.weight(i) >= 0.0);
        prop_assert!(rule.weight(0) >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn truncation_is_eps_sound(
        r in 0.5f64..0.999,
        shrink in 0.1f64..=1.0,
        alpha in 0.1f64..=1.0,
        delta in 0.5f64..0.999,
        eps_exp in 3i32..9,
    ) {
        let eps = 10f64.powi(-eps_exp);
        let params = PoolParams::new(0.01, 100.0, delta).unwrap();
        let u = UtilityFunction::power(alpha).unwrap();
        let rule = AllocationRule::geometric((1.0 - r) * shrink, r).unwrap();
        let depth = truncation_depth(&rule, &params, &u, eps).unwrap();
        let full = fixed_rule_steady_state_utility(&rule, &params, &u, eps * 1e-4).unwrap();
        let cut = fixed_rule_steady_state_utility(&rule.truncated(depth), &params, &u, eps).unwrap();
        prop_assert!((full - cut).abs() <= eps);
    }

    #[test]
    fn geometric_closed_form_matches_its_rule(alpha in 0.05f64..0.95, delta in 0.5f64..0.999) {
        let params = PoolParams::new(0.01, 10.0, delta).unwrap();
        let rule = geometric_optimal_rule(10.0, alpha, delta).unwrap();
        let u = UtilityFunction::power(alpha).unwrap();
        let closed = geometric_steady_state_utility(&params, alpha).unwrap();
        let summed = fixed_rule_steady_state_utility(&rule, &params, &u, 1e-13).unwrap();
        prop_assert!((closed - summed).abs() <= 1e-9 * closed);
    }
}

#[test]
fn lower_branch_is_strictly_decreasing() {
    let grid: Vec<f64> = (1..2000).map(|k| -INV_E + INV_E * k as f64 / 2000.0).collect();
    let values: Vec<f64> = grid.iter().map(|&x| lambert_w_minus1(x).unwrap().value).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]));
}

fn dirichlet_split(rng: &mut ChaCha8Rng, n: usize, budget: f64) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| budget * v / total).collect()
}

#[test]
fn kkt_point_beats_random_feasible_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..50 {
        let u = if case % 3 == 0 {
            UtilityFunction::LogShifted
        } else {
            UtilityFunction::power(rng.random_range(0.05..0.95)).unwrap()
        };
        let n = rng.random_range(1..=20);
        let delta = rng.random_range(0.3..0.999);
        let budget = rng.random_range(0.1..50.0);
        let sol = solve_fixed_rule_kkt(&u, delta, budget, n, 1e-12).unwrap();
        assert!(sol.kkt_violation(&u, delta) <= 1e-8, "case {case}: {sol:?}");
        assert!((sol.budget_used - budget).abs() <= 1e-9 * budget);
        assert!(sol.y.iter().all(|&y| y >= 0.0));
        for _ in 0..1000 {
            let y = dirichlet_split(&mut rng, n, budget);
            assert!(sol.objective >= objective(&u, delta, &y) - 1e-10, "case {case}");
        }
    }
}

#[test]
fn truncated_solutions_converge_to_geometric_rule() {
    let (alpha, delta) = (0.5, 0.99);
    let limit = geometric_optimal_rule(1.0, alpha, delta).unwrap();
    let u = UtilityFunction::power(alpha).unwrap();
    let params = PoolParams::new(1.0, 1.0, delta).unwrap();
    let ceiling = geometric_steady_state_utility(&params, alpha).unwrap();
    let mut prev_gap = f64::INFINITY;
    let mut prev_obj = 0.0;
    for n in [10, 100, 1000, 10_000] {
        let sol = truncated_lagrange_power(n, alpha, delta, 1.0).unwrap();
        let gap = sol
            .y
            .iter()
            .enumerate()
            .map(|(i, y)| (y - limit.weight(i)).abs())
            .fold(0.0, f64::max);
        assert!(gap <= prev_gap, "n={n}: {gap} > {prev_gap}");
        assert!(sol.objective >= prev_obj);
        assert!(sol.objective <= ceiling * (1.0 + 1e-12));
        assert!(sol.kkt_violation(&u, delta) <= 1e-8);
        prev_gap = gap;
        prev_obj = sol.objective;
    }
    assert!(prev_gap < 1e-12);
}

#[test]
fn million_share_window_matches_limit() {
    let sol = truncated_lagrange_power(1_000_000, 0.5, 0.99, 1.0).unwrap();
    let limit = geometric_optimal_rule(1.0, 0.5, 0.99).unwrap();
    for (i, y) in sol.y.iter().enumerate().step_by(997) {
        assert!((y - limit.weight(i)).abs() <= 1e-9);
    }
    let total = sol.y.iter().copied().collect::<CompensatedSum>().total();
    assert!((total - 1.0).abs() < 1e-9);
}
