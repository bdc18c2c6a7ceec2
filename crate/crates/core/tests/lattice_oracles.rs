use proptest::prelude::*;
use strip_homog::lattice::{
    approx_period_t_s, balanced_infimum, classify_direction, dirichlet_approx, discrepancy, dist_to_lattice, period_t,
    rate_function_lambda, weyl_points, Direction, DEFAULT_Q_MAX, DEFAULT_TOL,
};

/// Sup over half-open intervals with endpoints in `{0, 1} ∪ points`, closed and open limits.
fn brute_discrepancy(x: f64, n: usize) -> f64 {
    let pts: Vec<f64> = (1..=n).map(|k| (k as f64 * x).rem_euclid(1.0)).collect();
    let mut ends = vec![0.0, 1.0];
    ends.extend(&pts);
    let mut worst = 0.0f64;
    for &a in &ends {
        for &b in &ends {
            if b < a {
                continue;
            }
            let closed = pts.iter().filter(|&&p| a <= p && p <= b).count() as f64 / n as f64;
            let open = pts.iter().filter(|&&p| a < p && p < b).count() as f64 / n as f64;
            worst = worst.max(closed - (b - a)).max((b - a) - open);
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discrepancy_matches_brute_force(x in 0.0f64..1.0, n in 1usize..120) {
        prop_assert!((discrepancy(x, n) - brute_discrepancy(x, n)).abs() < 1e-12);
    }

    #[test]
    fn discrepancy_of_rationals_matches_brute_force(p in 0i64..12, q in 1i64..12, n in 1usize..60) {
        let x = p as f64 / q as f64;
        prop_assert!((discrepancy(x, n) - brute_discrepancy(x, n)).abs() < 1e-12);
    }

    #[test]
    fn discrepancy_lies_between_one_over_n_and_one(x in -3.0f64..3.0, n in 1usize..500) {
        let d = discrepancy(x, n);
        prop_assert!(d >= 1.0 / n as f64 - 1e-12 && d <= 1.0 + 1e-12);
    }

    #[test]
    fn weyl_points_are_fractional_parts(x in -5.0f64..5.0, n in 1usize..50) {
        let pts = weyl_points(x, n);
        prop_assert_eq!(pts.len(), n);
        for (k, p) in pts.iter().enumerate() {
            prop_assert!((0.0..1.0).contains(p));
            let v = (k + 1) as f64 * x;
            prop_assert!((v - p - (v - p).round()).abs() < 1e-9);
        }
    }

    #[test]
    fn dirichlet_bound_holds(alphas in prop::collection::vec(-4.0f64..4.0, 1..=3), n in 1u64..150) {
        let a = dirichlet_approx(&alphas, n).unwrap();
        let bound = (n as f64).powf(-1.0 / alphas.len() as f64);
        prop_assert!(a.q >= 1 && a.q <= n as i64);
        for (x, &p) in alphas.iter().zip(&a.p) {
            prop_assert!((a.q as f64 * x - p as f64).abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn approx_period_is_the_first_admissible_time(a in 1.0f64..3.0, b in 0.1f64..3.0, s in 0.05f64..0.3) {
        let d = classify_direction(&[a, b], DEFAULT_TOL, DEFAULT_Q_MAX).unwrap();
        let v = d.planar().unwrap();
        let ap = approx_period_t_s(&d, s, 100_000).unwrap();
        let dist = |t: f64| dist_to_lattice(&[t * v[0], t * v[1]]);
        prop_assert!(ap.t >= 1.0 - 1e-12);
        prop_assert!(dist(ap.t) <= s + 1e-9);
        prop_assert!(ap.within_bound());
        // Dense scan below the returned time; the slack absorbs the scan step.
        let step = 1e-3;
        let mut t = 1.0;
        while t < ap.t - step {
            prop_assert!(dist(t) > s - step, "earlier time {} at distance {}", t, dist(t));
            t += step;
        }
    }

    #[test]
    fn balanced_infimum_beats_a_dense_k_grid(eps in 1e-4f64..0.5, a in 0.1f64..50.0) {
        let (value, k) = balanced_infimum(eps, a);
        let dense = (1..1000).map(|i| i as f64 / 1000.0).map(|k| eps.powf(k) * a + eps.powf(1.0 - k)).fold(f64::INFINITY, f64::min);
        prop_assert!(value <= dense + 1e-12);
        prop_assert!(value >= dense * (1.0 - 1e-2));
        prop_assert!(k > 0.0 && k < 1.0);
    }

    #[test]
    fn rational_rate_is_balanced_period_term(p in -9i64..10, q in 1i64..10, eps in 1e-4f64..0.2) {
        prop_assume!(num_integer::gcd(p, q) == 1);
        let d = Direction::from_integer(&[p, q]).unwrap();
        let t = period_t(&d).unwrap();
        prop_assert!((t - (p as f64).hypot(q as f64)).abs() < 1e-12);
        let lam = rate_function_lambda(eps, &d, &[1]).unwrap().lambda_value;
        prop_assert!((lam - balanced_infimum(eps, t).0).abs() < 1e-15);
    }

    #[test]
    fn classification_ignores_positive_scaling(p in -20i64..20, q in 1i64..20, scale in 0.1f64..10.0) {
        let g = num_integer::gcd(p, q);
        let d = classify_direction(&[p as f64 * scale, q as f64 * scale], DEFAULT_TOL, DEFAULT_Q_MAX).unwrap();
        prop_assert!(d.is_rational());
        let t = period_t(&d).unwrap();
        prop_assert!((t - ((p / g) as f64).hypot((q / g) as f64)).abs() < 1e-9);
    }
}

#[test]
fn irrational_rate_uses_the_best_candidate() {
    let d = classify_direction(&[1.0, 2f64.sqrt()], DEFAULT_TOL, DEFAULT_Q_MAX).unwrap();
    let candidates: Vec<usize> = (1..=64).collect();
    let eps = 1e-3;
    let lam = rate_function_lambda(eps, &d, &candidates).unwrap().lambda_value;
    let oracle = candidates
        .iter()
        .map(|&n| balanced_infimum(eps, n as f64).0 + discrepancy(d.m_generator(), n))
        .fold(f64::INFINITY, f64::min);
    assert!((lam - oracle).abs() < 1e-15);
}
