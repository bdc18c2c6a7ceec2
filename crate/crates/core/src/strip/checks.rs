//! Comparison, localization and stability experiments on the discrete problem.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{GridField, NodeTag};
use super::problem::{StripProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use super::scheme::DiscreteScheme;
use super::solve::solve_cell_problem;
use crate::expr::torus_grid;
use crate::operators::BoundaryOperator;
use crate::{Error, Result};

/// Row slack allowed when certifying sub- and supersolutions.
pub const ROW_SLACK: f64 = 1e-7;

/// `max(u - v)` after checking that `u` is a discrete subsolution and `v` a supersolution.
pub fn check_comparison(u: &GridField, v: &GridField, scheme: &DiscreteScheme) -> Result<f64> {
    check_comparison_with(u, v, scheme, ROW_SLACK)
}

/// [`check_comparison`] with an explicit row slack.
pub fn check_comparison_with(u: &GridField, v: &GridField, scheme: &DiscreteScheme, slack: f64) -> Result<f64> {
    let g = &scheme.grid;
    if u.grid != *g || v.grid != *g {
        return Err(Error::InvalidInput("fields must live on the scheme grid".into()));
    }
    let ru = scheme.row_values(&u.values)?;
    let rv = scheme.row_values(&v.values)?;
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let k = g.idx(i, j);
            let tag = g.tag(i, j);
            if ru[k] > slack {
                return Err(Error::NotSubSuper(format!("u violates the {} row at ({i}, {j}) by {:e}", tag.as_str(), ru[k])));
            }
            if rv[k] < -slack {
                return Err(Error::NotSubSuper(format!("v violates the {} row at ({i}, {j}) by {:e}", tag.as_str(), -rv[k])));
            }
        }
    }
    Ok(u.values.iter().zip(&v.values).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max))
}

/// The linear barriers `q.x + offset -+ M ((x - tau).nu + 1)` on the scheme grid.
pub fn barrier_fields(scheme: &DiscreteScheme, m: f64) -> (GridField, GridField) {
    let p = &scheme.problem;
    let (lo, hi) = (p.bottom_offset.min(p.lateral_offset), p.bottom_offset.max(p.lateral_offset));
    let g = scheme.grid.clone();
    let sub = GridField::from_fn(g.clone(), |x| p.q_dot(x) + lo - m * (g.frame(x).1 + 1.0));
    let sup = GridField::from_fn(g.clone(), |x| p.q_dot(x) + hi + m * (g.frame(x).1 + 1.0));
    (sub, sup)
}

/// `(R, gap)` where `gap` is the largest change in `Pi ∩ B_1(tau)` caused by raising the
/// lateral data by `m`.
pub fn localization_gap(p: &StripProblem, m: f64, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    radii
        .iter()
        .map(|&radius| {
            if radius < 4.0 {
                return Err(Error::InvalidInput(format!("R = {radius} is below 4")));
            }
            let base = p.clone().with_radius(radius);
            let raised = base.clone().with_offsets(base.bottom_offset, base.lateral_offset + m);
            let (w1, _) = solve_cell_problem(&base, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let (w2, _) = solve_cell_problem(&raised, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            Ok((radius, w2.max_abs_diff_in_ball(&w1, 1.0)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationGap {
    /// `max |u_1 - u_2|` over `Pi ∩ B_1(tau)`.
    pub gap: f64,
    /// Largest sampled `|G_1 - G_2| / (1 + |p|)`.
    pub sampled_closeness: f64,
    /// Empirical Lipschitz bound of `u_1` over the same ball.
    pub lipschitz: f64,
}

const CLOSENESS_SAMPLES: usize = 2000;
const CLOSENESS_P_BOX: f64 = 4.0;

/// Largest `|G_1(p, y) - G_2(p, y)| / (1 + |p|)` over a seeded sample.
pub fn sampled_closeness(g1: &BoundaryOperator, g2: &BoundaryOperator, nu: [f64; 2], seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ys: Vec<[f64; 2]> = torus_grid(16).collect();
    let mut worst = 0.0f64;
    for k in 0..CLOSENESS_SAMPLES {
        let p = [rng.random_range(-CLOSENESS_P_BOX..CLOSENESS_P_BOX), rng.random_range(-CLOSENESS_P_BOX..CLOSENESS_P_BOX)];
        let y = ys[k % ys.len()];
        let d = (g1.eval(p, &y, nu)? - g2.eval(p, &y, nu)?).abs();
        worst = worst.max(d / (1.0 + p[0].hypot(p[1])));
    }
    Ok(worst)
}

/// Solves with `g1` and `g2` and measures the gap near `tau`, after checking that the two
/// boundary operators are `delta`-close.
pub fn perturbation_gap(p: &StripProblem, g1: &BoundaryOperator, g2: &BoundaryOperator, delta: f64) -> Result<PerturbationGap> {
    let nu = p.nu2();
    let closeness = sampled_closeness(g1, g2, nu, 0x5eed)?;
    if closeness > delta * (1.0 + 1e-12) {
        return Err(Error::PerturbationHypothesisFailed { excess: closeness - delta });
    }
    let (u1, _) = solve_cell_problem(&p.clone().with_g(g1.clone()), DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let (u2, _) = solve_cell_problem(&p.clone().with_g(g2.clone()), DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok(PerturbationGap { gap: u1.max_abs_diff_in_ball(&u2, 1.0), sampled_closeness: closeness, lipschitz: lipschitz_in_ball(&u1, 1.0) })
}

/// Largest one-sided difference quotient between neighbouring nodes inside the ball.
pub fn lipschitz_in_ball(u: &GridField, radius: f64) -> f64 {
    let g = &u.grid;
    let inside = |i: usize, j: usize| g.s(i).hypot(g.r(j)) <= radius + 1e-12;
    let mut worst = 0.0f64;
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            if !inside(i, j) {
                continue;
            }
            if i < g.nx && inside(i + 1, j) {
                worst = worst.max((u.at(i + 1, j) - u.at(i, j)).abs() / g.h);
            }
            if j < g.ny && inside(i, j + 1) {
                worst = worst.max((u.at(i, j + 1) - u.at(i, j)).abs() / g.h);
            }
        }
    }
    worst
}

/// Tags of every node, for export.
pub fn node_tags(u: &GridField) -> impl Iterator<Item = NodeTag> + '_ {
    let g = &u.grid;
    (0..g.len()).map(move |k| g.tag(k % (g.nx + 1), k / (g.nx + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Direction;
    use crate::operators::EllipticOperator;
    use crate::strip::discretize;

    fn base() -> StripProblem {
        StripProblem::new(EllipticOperator::laplacian(), BoundaryOperator::constant(0.2), Direction::from_integer(&[1, 2]).unwrap(), 0.25, 0.3)
            .unwrap()
            .with_radius(4.0)
    }

    #[test]
    fn constant_shift_is_exact_comparison() {
        let p = base();
        let s = discretize(&p).unwrap();
        let (u, _) = solve_cell_problem(&p, 1e-10, 100).unwrap();
        let v = GridField::new(u.grid.clone(), u.values.iter().map(|x| x + 0.1).collect());
        let d = check_comparison(&u, &v, &s).unwrap();
        assert!((d + 0.1).abs() < 1e-12);
    }

    #[test]
    fn barriers_bracket_the_solution() {
        let p = base();
        let s = discretize(&p).unwrap();
        let (u, rep) = solve_cell_problem(&p, 1e-10, 100).unwrap();
        let (lo, hi) = barrier_fields(&s, rep.barrier_constant);
        assert!(check_comparison(&lo, &u, &s).unwrap() <= 1e-9);
        assert!(check_comparison(&u, &hi, &s).unwrap() <= 1e-9);
    }

    #[test]
    fn wrong_order_is_rejected() {
        let p = base();
        let s = discretize(&p).unwrap();
        let (u, rep) = solve_cell_problem(&p, 1e-10, 100).unwrap();
        let (_, hi) = barrier_fields(&s, rep.barrier_constant + 1.0);
        assert!(matches!(check_comparison(&hi, &u, &s), Err(Error::NotSubSuper(_))));
    }

    #[test]
    fn zero_perturbations_vanish() {
        let p = base();
        let gaps = localization_gap(&p, 0.0, &[4.0]).unwrap();
        assert_eq!(gaps[0].1, 0.0);
        let g = p.g.clone();
        assert_eq!(perturbation_gap(&p, &g, &g, 0.0).unwrap().gap, 0.0);
        assert!(matches!(
            perturbation_gap(&p, &g, &g.shifted(0.1), 0.05),
            Err(Error::PerturbationHypothesisFailed { .. })
        ));
    }
}
