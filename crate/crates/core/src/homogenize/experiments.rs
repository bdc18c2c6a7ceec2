use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::slope::average_slope;
use crate::lattice::{default_n_candidates, rate_function_lambda, Direction};
use crate::operators::{project_g_k, BoundaryOperator, EllipticOperator};
use crate::strip::{solve_cell_problem, StripProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::{Error, Result};

/// Lateral radius of the rescaled first-homogenization problem.
pub const FIRST_HOMOGENIZATION_RADIUS: f64 = 8.0;

/// Solves and returns the average slope.
pub fn solve_slope(p: &StripProblem) -> Result<f64> {
    let (u, _) = solve_cell_problem(p, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok(average_slope(&u, p)?.mu)
}

/// Slope of the flat problem of width `N eps` with the projected data `G_k`.
///
/// The problem is rescaled by `N eps` to the unit strip, where the fast variable becomes
/// `N x`; slopes are unchanged by the rescaling since `F` is positively homogeneous.
pub fn first_homogenized_slope(
    g: &BoundaryOperator,
    delta: f64,
    k: i64,
    big_n: usize,
    eps: f64,
    f: &EllipticOperator,
    q: [f64; 2],
) -> Result<f64> {
    if big_n == 0 || !(big_n as f64 * eps < 1.0) {
        return Err(Error::InvalidInput(format!("need 0 < N eps < 1, got N = {big_n}, eps = {eps}")));
    }
    if q[1].abs() > 1e-12 {
        return Err(Error::InvalidInput("q must be tangential to the flat boundary".into()));
    }
    let gk = project_g_k(g, delta, k)?;
    let scale = 1.0 / big_n as f64;
    let p = StripProblem::new(f.clone(), gk, Direction::from_integer(&[0, 1])?, scale, q[0])?
        .with_radius(FIRST_HOMOGENIZATION_RADIUS)
        .with_h(scale / 8.0);
    solve_slope(&p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub eps: f64,
    pub h: f64,
    pub radius: f64,
    pub mu: f64,
    pub lambda_bound: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Slopes along a decreasing sequence of `eps`, with the rate bound at each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub nu: [f64; 2],
    pub tau: [f64; 2],
    pub q_t: f64,
    pub entries: Vec<RateEntry>,
    /// Slope at the finest `eps`.
    pub mu_ref: f64,
    /// Least-squares slope of `log |mu - mu_ref|` against `log eps` over all but the finest
    /// entry; `None` when fewer than two deviations are nonzero.
    pub fitted_exponent: Option<f64>,
}

impl RateCurve {
    /// `|mu - mu_ref|` for every entry but the finest.
    pub fn deviations(&self) -> Vec<(f64, f64)> {
        let n = self.entries.len();
        self.entries[..n.saturating_sub(1)].iter().map(|e| (e.eps, (e.mu - self.mu_ref).abs())).collect()
    }

    /// Least-squares `C` in `dev ~ C * bound` and the largest relative residual of that fit.
    pub fn fit_constant(&self) -> (f64, f64) {
        let n = self.entries.len().saturating_sub(1);
        let rows: Vec<(f64, f64)> =
            self.entries[..n].iter().map(|e| ((e.mu - self.mu_ref).abs(), e.lambda_bound)).collect();
        let num: f64 = rows.iter().map(|(d, b)| d * b).sum();
        let den: f64 = rows.iter().map(|(_, b)| b * b).sum();
        let c = if den > 0.0 { num / den } else { 0.0 };
        let worst = rows
            .iter()
            .map(|(d, b)| if c * b > 0.0 { (d - c * b).abs() / (c * b) } else { 0.0 })
            .fold(0.0f64, f64::max);
        (c, worst)
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Solves the template at each `eps` (keeping its `h / eps` ratio) and fits the decay.
pub fn epsilon_sweep(template: &StripProblem, eps_list: &[f64]) -> Result<RateCurve> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("eps list must be nonempty and strictly decreasing".into()));
    }
    let ratio = template.h / template.eps;
    let mut entries = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let p = template.clone().with_eps(eps).with_h(eps * ratio);
        let (u, rep) = solve_cell_problem(&p, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let mu = average_slope(&u, &p)?.mu;
        let lambda_bound = rate_function_lambda(eps, &p.nu, &default_n_candidates())?.lambda_value;
        entries.push(RateEntry {
            eps,
            h: p.h,
            radius: p.radius,
            mu,
            lambda_bound,
            residual: rep.residual_interior.max(rep.residual_neumann),
            iterations: rep.iterations,
        });
    }
    let mu_ref = entries.last().expect("nonempty").mu;
    let (xs, ys): (Vec<f64>, Vec<f64>) = entries[..entries.len() - 1]
        .iter()
        .filter_map(|e| {
            let d = (e.mu - mu_ref).abs();
            (d > 0.0).then(|| (e.eps.ln(), d.ln()))
        })
        .unzip();
    Ok(RateCurve {
        nu: template.nu2(),
        tau: template.tau,
        q_t: template.q_t(),
        entries,
        mu_ref,
        fitted_exponent: least_squares_slope(&xs, &ys),
    })
}

/// The Lipschitz constant `m / (1 - c)` of the homogenized slope in `q`.
pub fn q_lipschitz_bound(g: &BoundaryOperator) -> f64 {
    g.m_lip / (1.0 - g.c_obliq)
}

/// `|mu(q1) - mu(q2)| / |q1 - q2|` for each pair of tangential components.
pub fn lipschitz_in_q(template: &StripProblem, q_pairs: &[(f64, f64)]) -> Result<Vec<f64>> {
    if q_pairs.iter().any(|(a, b)| a == b) {
        return Err(Error::InvalidInput("each q pair must consist of distinct values".into()));
    }
    q_pairs
        .par_iter()
        .map(|&(a, b)| {
            let m1 = solve_slope(&template.clone().with_q_t(a))?;
            let m2 = solve_slope(&template.clone().with_q_t(b))?;
            Ok((m1 - m2).abs() / (a - b).abs())
        })
        .collect()
}
