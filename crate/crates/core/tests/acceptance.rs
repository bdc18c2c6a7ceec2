//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::Instant;

use nalgebra::{Matrix2, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strip_homog::expr::Expr;
use strip_homog::homogenize::{
    direction_continuity, epsilon_sweep, flatness_check, lipschitz_in_q, q_lipschitz_bound, solve_slope, ContinuityConfig,
};
use strip_homog::lattice::{
    approx_period_t_s, classify_direction, default_n_candidates, dirichlet_approx, discrepancy, period_t, rate_function_lambda,
    Direction, DEFAULT_Q_MAX, DEFAULT_TOL,
};
use strip_homog::operators::{pucci_minus, pucci_plus, BoundaryOperator, EllipticOperator, Sym2};
use strip_homog::strip::{
    check_comparison, discretize, localization_gap, perturbation_gap, solve_cell_problem, StripProblem,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn e2() -> Direction {
    Direction::from_integer(&[0, 1]).unwrap()
}

fn laplacian_problem(g: BoundaryOperator, nu: Direction, eps: f64, q_t: f64) -> StripProblem {
    StripProblem::new(EllipticOperator::laplacian(), g, nu, eps, q_t).unwrap()
}

/// Fixed point of `mu = theta sqrt(1 + q^2 + mu^2)` by iteration; a contraction for `theta < 1`.
fn capillarity_slope(theta: f64, q: f64) -> f64 {
    let mut mu = 0.0;
    for _ in 0..200 {
        mu = theta * (1.0 + q * q + mu * mu).sqrt();
    }
    mu
}

fn oscillatory_oblique() -> BoundaryOperator {
    BoundaryOperator::linear_oblique([Expr::constant(0.3), Expr::constant(1.0)], Expr::sin(1.0, 0, 1), [0.0, 1.0]).unwrap()
}

fn exact_flux() -> Outcome {
    let start = Instant::now();
    let eps = 0.125;
    let p = laplacian_problem(BoundaryOperator::constant(0.3), e2(), eps, 0.0).with_h(eps / 8.0).with_radius(8.0);
    let mu = solve_slope(&p).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let err = (mu - 0.3).abs();
    outcome(err <= 5.0 * p.h && secs < 60.0, format!("|mu - 0.3| = {err:.3e} <= 5h = {:.3e}, {secs:.2}s < 60s", 5.0 * p.h))
}

fn capillarity_fixed_point() -> Outcome {
    let eps = 0.125;
    let exact = capillarity_slope(0.5, 0.0);
    let g = BoundaryOperator::capillarity(Expr::constant(0.5)).unwrap();
    let gaps: Vec<f64> = [8.0, 16.0]
        .iter()
        .map(|&d| (solve_slope(&laplacian_problem(g.clone(), e2(), eps, 0.0).with_h(eps / d)).unwrap() - exact).abs())
        .collect();
    let tilted_exact = capillarity_slope(0.5, 1.0);
    let tilted = (solve_slope(&laplacian_problem(g, e2(), eps, 1.0)).unwrap() - tilted_exact).abs();
    let shrink = gaps[0] / gaps[1];
    let pass = gaps.iter().all(|&gap| gap <= 1e-2) && shrink >= 1.5 && tilted <= 1e-2;
    outcome(
        pass,
        format!(
            "gap(h=eps/8) = {:.3e}, gap(h=eps/16) = {:.3e}, shrink {shrink:.3} >= 1.5, |q|=1 gap {tilted:.3e} (oracle {tilted_exact:.5})",
            gaps[0], gaps[1]
        ),
    )
}

fn rational_rate() -> Outcome {
    let p = laplacian_problem(oscillatory_oblique(), e2(), 0.25, 0.0);
    let curve = epsilon_sweep(&p, &[0.25, 0.125, 0.0625, 0.03125, 0.015625]).unwrap();
    let t_nu = period_t(&p.nu).unwrap();
    let bound_ok = curve.entries.iter().all(|e| (e.lambda_bound - 2.0 * (e.eps * t_nu).sqrt()).abs() < 1e-12);
    let exponent = curve.fitted_exponent.unwrap_or(f64::NAN);
    let (c, residual) = curve.fit_constant();
    let under = curve.deviations().iter().zip(&curve.entries).all(|((_, d), e)| *d <= c * e.lambda_bound);
    let devs: Vec<String> = curve.deviations().iter().map(|(e, d)| format!("{e}:{d:.2e}")).collect();
    outcome(
        bound_ok && exponent >= 0.4 && residual <= 0.2 && under,
        format!("exponent {exponent:.3} >= 0.4, C = {c:.3e}, fit residual {residual:.3} <= 0.2, devs [{}]", devs.join(", ")),
    )
}

fn lipschitz_q() -> Outcome {
    let g = BoundaryOperator::capillarity(Expr::constant(0.5)).unwrap();
    let p = laplacian_problem(g.clone(), e2(), 0.125, 0.0).with_h(1.0 / 64.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pairs: Vec<(f64, f64)> = (0..10).map(|_| (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
    pairs.push((0.0, 1.0));
    let ratios = lipschitz_in_q(&p, &pairs).unwrap();
    let bound = q_lipschitz_bound(&g) * 1.1;
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let analytic = capillarity_slope(0.5, 1.0) - capillarity_slope(0.5, 0.0);
    outcome(
        worst <= bound && ratios.len() >= 11,
        format!("max ratio {worst:.4} <= 1.1 m/(1-c) = {bound:.4} over {} pairs, analytic pair ratio {:.4} (oracle {analytic:.4})", ratios.len(), ratios[10]),
    )
}

fn localization() -> Outcome {
    let p = laplacian_problem(BoundaryOperator::constant(0.3), e2(), 0.125, 0.0);
    let gaps = localization_gap(&p, 1.0, &[4.0, 8.0, 16.0]).unwrap();
    let (r1, r2) = (gaps[1].1 / gaps[0].1, gaps[2].1 / gaps[1].1);
    outcome(
        r1 <= 0.75 && r2 <= 0.75,
        format!("gap(4) = {:.3e}, gap(8) = {:.3e}, gap(16) = {:.3e}, ratios {r1:.3e}, {r2:.3e} <= 0.75", gaps[0].1, gaps[1].1, gaps[2].1),
    )
}

fn perturbation() -> Outcome {
    let delta = 0.05;
    let g1 = BoundaryOperator::constant(0.3);
    let g2 = g1.shifted(delta);
    let p = laplacian_problem(g1.clone(), e2(), 0.125, 0.0).with_radius(16.0);
    let r = perturbation_gap(&p, &g1, &g2, delta).unwrap();
    let scale = delta / (1.0 - g1.c_obliq);
    outcome(
        r.gap >= 0.9 * scale && r.gap <= 1.3 * scale,
        format!("gap {:.5} in [{:.5}, {:.5}] at R = 16", r.gap, 0.9 * scale, 1.3 * scale),
    )
}

fn comparison_fuzz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dirs = [[0, 1], [1, 2], [-3, 1], [1, 1], [2, -1]];
    let tol = 1e-8;
    let mut worst = f64::NEG_INFINITY;
    for case in 0..20 {
        let nu = Direction::from_integer(&dirs[case % dirs.len()]).unwrap();
        let n = nu.planar().unwrap();
        let f = match case % 3 {
            0 => EllipticOperator::laplacian(),
            1 => EllipticOperator::pucci_plus(1.0, 2.0).unwrap(),
            _ => EllipticOperator::pucci_minus(1.0, 2.0).unwrap(),
        };
        let g = match case % 4 {
            0 => BoundaryOperator::constant(rng.random_range(-0.5..0.5)),
            1 => BoundaryOperator::capillarity(Expr::constant(rng.random_range(0.1..0.6)).plus(Expr::sin(0.1, 0, 1))).unwrap(),
            2 => {
                let a = rng.random_range(-0.5..0.5);
                let gamma = [Expr::constant(n[0] + a * n[1]), Expr::constant(n[1] - a * n[0])];
                BoundaryOperator::linear_oblique(gamma, Expr::cos(0.3, 1, 1), n).unwrap()
            }
            _ => BoundaryOperator::capillarity(Expr::constant(rng.random_range(0.1..0.6))).unwrap(),
        };
        let q_t = rng.random_range(-1.0..1.0);
        let base = StripProblem::new(f, g.clone(), nu, 0.25, q_t).unwrap().with_radius(4.0).with_h(1.0 / 32.0);
        let (a_lo, a_hi) = (rng.random_range(0.0..0.2), rng.random_range(0.0..0.2));
        let lower = base
            .clone()
            .with_g(g.shifted(-a_lo))
            .with_offsets(-rng.random_range(0.0..0.2), -rng.random_range(0.0..0.2));
        let upper = base
            .clone()
            .with_g(g.shifted(a_hi))
            .with_offsets(rng.random_range(0.0..0.2), rng.random_range(0.0..0.2));
        let (u, _) = solve_cell_problem(&lower, tol, 1000).unwrap();
        let (v, _) = solve_cell_problem(&upper, tol, 1000).unwrap();
        let scheme = discretize(&base).unwrap();
        match check_comparison(&u, &v, &scheme) {
            Ok(m) => worst = worst.max(m),
            Err(e) => return outcome(false, format!("case {case}: {e}")),
        }
    }
    outcome(worst <= 10.0 * tol, format!("max(sub - super) = {worst:.3e} <= 10 tol over 20 pairs"))
}

fn pucci_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut worst, mut antisym) = (0.0f64, true);
    for _ in 0..100 {
        let m = Sym2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let lambda = rng.random_range(0.1..1.0);
        let big = lambda + rng.random_range(0.0..2.0);
        let eig = SymmetricEigen::new(Matrix2::new(m.xx, m.xy, m.xy, m.yy)).eigenvalues;
        let plus: f64 = eig.iter().map(|&e| if e > 0.0 { -big * e } else { -lambda * e }).sum();
        let minus: f64 = eig.iter().map(|&e| if e > 0.0 { -lambda * e } else { -big * e }).sum();
        worst = worst.max((pucci_plus(&m, lambda, big) - plus).abs()).max((pucci_minus(&m, lambda, big) - minus).abs());
        antisym &= pucci_minus(&m, lambda, big) == -pucci_plus(&m.scale(-1.0), lambda, big);
    }
    outcome(worst <= 1e-12 && antisym, format!("max deviation from eigen oracle {worst:.2e} <= 1e-12, antisymmetry exact: {antisym}"))
}

/// Extreme discrepancy over half-open intervals by enumerating closed and open intervals
/// between critical endpoints.
fn brute_discrepancy(x: f64, n: usize) -> f64 {
    let mut pts: Vec<f64> = (1..=n).map(|k| (k as f64 * x).rem_euclid(1.0)).collect();
    pts.sort_by(f64::total_cmp);
    let mut ends = vec![0.0];
    ends.extend(&pts);
    ends.push(1.0);
    let count_le = |b: f64| pts.partition_point(|&p| p <= b);
    let count_lt = |a: f64| pts.partition_point(|&p| p < a);
    let mut worst = 0.0f64;
    for (i, &a) in ends.iter().enumerate() {
        for &b in &ends[i..] {
            let closed = (count_le(b) - count_lt(a)) as f64 / n as f64;
            let open = (count_lt(b) as f64 - count_le(a) as f64).max(0.0) / n as f64;
            worst = worst.max(closed - (b - a)).max((b - a) - open);
        }
    }
    worst
}

fn discrepancy_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let x = rng.random_range(0.0..1.0);
        let n = rng.random_range(1..=2000usize);
        worst = worst.max((discrepancy(x, n) - brute_discrepancy(x, n)).abs());
    }
    let x = std::f64::consts::FRAC_1_SQRT_2;
    let d: Vec<f64> = [10, 100, 1000].iter().map(|&n| discrepancy(x, n)).collect();
    outcome(
        worst <= 1e-12 && d[0] > d[1] && d[1] > d[2],
        format!("max |fast - brute| = {worst:.2e} <= 1e-12, D(10, 100, 1000) = {:.4}, {:.4}, {:.4}", d[0], d[1], d[2]),
    )
}

fn dirichlet() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_slack = f64::NEG_INFINITY;
    for case in 0..50 {
        let dim = 1 + case % 3;
        let alphas: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let n = rng.random_range(1..=100u64);
        let a = dirichlet_approx(&alphas, n).unwrap();
        let bound = (n as f64).powf(-1.0 / dim as f64);
        let err = alphas.iter().zip(&a.p).map(|(x, &p)| (a.q as f64 * x - p as f64).abs()).fold(0.0, f64::max);
        if !(1..=n as i64).contains(&a.q) {
            return outcome(false, format!("q = {} outside [1, {n}]", a.q));
        }
        worst_slack = worst_slack.max(err - bound);
    }
    outcome(worst_slack <= 0.0, format!("max (|q alpha - p| - N^(-1/n)) = {worst_slack:.3e} <= 0 over 50 cases"))
}

fn rate_thresholds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rational_worst = 0.0f64;
    let mut count = 0;
    while count < 20 {
        let (a, b) = (rng.random_range(-12..=12i64), rng.random_range(1..=12i64));
        if num_gcd(a, b) != 1 {
            continue;
        }
        count += 1;
        let d = Direction::from_integer(&[a, b]).unwrap();
        let t = period_t(&d).unwrap();
        assert!((t - (a as f64).hypot(b as f64)).abs() < 1e-12);
        let delta = rng.random_range(0.01..0.5);
        let eps = 0.99 * delta * delta / t;
        let lam = rate_function_lambda(eps, &d, &default_n_candidates()).unwrap().lambda_value;
        rational_worst = rational_worst.max(lam / (2.0 * delta));
    }
    let surrogates = [
        [1.0, 2f64.sqrt()],
        [1.0, 3f64.sqrt()],
        [1.0, 5f64.sqrt()],
        [2f64.sqrt(), 3f64.sqrt()],
        [1.0, 0.5 * (1.0 + 5f64.sqrt())],
        [1.0, 7f64.sqrt()],
        [3.0, 11f64.sqrt()],
        [1.0, 13f64.sqrt()],
        [2.0, 1.0 + 2f64.sqrt()],
        [5f64.sqrt(), 2.0],
    ];
    let mut irrational_worst = 0.0f64;
    for (i, v) in surrogates.iter().enumerate() {
        let d = classify_direction(v, DEFAULT_TOL, DEFAULT_Q_MAX).unwrap();
        assert!(!d.is_rational());
        let nu = d.planar().unwrap();
        let delta = 0.05 + 0.025 * i as f64;
        let t = approx_period_t_s(&d, delta, 1_000_000).unwrap().t;
        let lattice_point = [(t * nu[0]).round(), (t * nu[1]).round()];
        let miss = (t * nu[0] - lattice_point[0]).hypot(t * nu[1] - lattice_point[1]);
        assert!(miss <= delta * (1.0 + 1e-12), "lattice check failed for {v:?}");
        let cos = (nu[0] * lattice_point[0] + nu[1] * lattice_point[1]) / lattice_point[0].hypot(lattice_point[1]);
        let theta = cos.clamp(-1.0, 1.0).acos();
        // Lambda is an infimum over all N; a dense range bounds it from above.
        let mut candidates: Vec<usize> = (1..=DENSE_N).collect();
        candidates.extend(default_n_candidates());
        candidates.push((1.0 / theta).floor() as usize);
        let eps = 0.99 * delta * delta * theta;
        let lam = rate_function_lambda(eps, &d, &candidates).unwrap().lambda_value;
        irrational_worst = irrational_worst.max(lam / (3.0 * delta));
    }
    outcome(
        rational_worst <= 1.0 && irrational_worst <= 1.0,
        format!("max Lambda/(2 delta) rational = {rational_worst:.4}, max Lambda/(3 delta) irrational = {irrational_worst:.4}, both <= 1"),
    )
}

const DENSE_N: usize = 2048;

fn num_gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn flatness() -> Outcome {
    let oscs: Vec<f64> = [0.25, 0.125, 0.0625, 0.03125]
        .iter()
        .map(|&eps| {
            let p = laplacian_problem(oscillatory_oblique(), e2(), eps, 0.0);
            let (u, _) = solve_cell_problem(&p, 1e-8, 1000).unwrap();
            flatness_check(&u, &p, 0.5).unwrap().osc
        })
        .collect();
    let ratios: Vec<f64> = oscs.windows(2).map(|w| w[1] / w[0]).collect();
    let pass = ratios.iter().all(|r| (0.3..=0.8).contains(r));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ");
    outcome(pass, format!("osc at d = 1/2 for eps = 1/4..1/32: [{}], halving ratios [{}] in [0.3, 0.8]", fmt(&oscs), fmt(&ratios)))
}

fn continuity() -> Outcome {
    let theta = Expr::constant(0.4).plus(Expr::cos(0.2, 1, 1)).plus(Expr::sin(0.1, 0, 1));
    let cfg = ContinuityConfig::new(EllipticOperator::laplacian(), BoundaryOperator::capillarity(theta).unwrap());
    let mut gaps = Vec::new();
    let mut per_k = Vec::new();
    for (delta, k1, k2) in [(0.5, 6, 8), (0.25, 33, 40)] {
        let nu1 = Direction::from_integer(&[-1, k1]).unwrap();
        let nu2 = Direction::from_integer(&[-1, k2]).unwrap();
        let r = direction_continuity(&nu1, &nu2, delta, &e2(), &cfg).unwrap();
        gaps.push(r.headline_gap);
        let ks: Vec<String> = r.rows.iter().map(|row| format!("{}:{:.3}", row.k, row.gap)).collect();
        per_k.push(format!("delta {delta} (eps {:.5}, N {}, M {}) per-k gaps [{}]", r.eps, r.n_steps, r.m_steps, ks.join(" ")));
    }
    outcome(
        gaps[1] <= gaps[0],
        format!("headline gap {:.3e} at delta 1/4 <= {:.3e} at delta 1/2; {}", gaps[1], gaps[0], per_k.join("; ")),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("exact constant-flux slope", exact_flux),
        ("capillarity fixed point under h-refinement", capillarity_fixed_point),
        ("rational rate sweep", rational_rate),
        ("Lipschitz in q", lipschitz_q),
        ("localization decay", localization),
        ("perturbation stability", perturbation),
        ("comparison fuzz", comparison_fuzz),
        ("Pucci oracle", pucci_oracle),
        ("discrepancy oracle", discrepancy_oracle),
        ("Dirichlet approximation", dirichlet),
        ("rate-function thresholds", rate_thresholds),
        ("flatness halving", flatness),
        ("continuity trend", continuity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "{} criterion {:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
