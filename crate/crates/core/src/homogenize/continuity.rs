use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiments::first_homogenized_slope;
use super::slope::{average_slope, local_slope};
use crate::lattice::{approx_period_t_s, Direction};
use crate::operators::{project_g_k, BoundaryOperator, EllipticOperator};
use crate::strip::{solve_cell_problem, StripProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::{Error, Result};

/// Numerical settings shared by both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityConfig {
    pub f: EllipticOperator,
    pub g: BoundaryOperator,
    pub q_t: f64,
    /// Oscillation scale; the largest admissible `1/n` when absent.
    pub eps: Option<f64>,
    /// Mesh size as a fraction of `eps`.
    pub h_per_eps: f64,
    pub radius: f64,
    pub search_cap: usize,
}

impl ContinuityConfig {
    pub fn new(f: EllipticOperator, g: BoundaryOperator) -> Self {
        Self { f, g, q_t: 0.0, eps: None, h_per_eps: 0.125, radius: 4.0, search_cap: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub k: i64,
    /// Local slope of the first direction's solution on strip `k`.
    pub mu_k: f64,
    /// First-homogenized slope with `N` repetitions.
    pub mu_n_gk: f64,
    /// First-homogenized slope with `M` repetitions.
    pub mu_m_gk: f64,
    /// `|mu_k - mu_n_gk|`.
    pub gap: f64,
    /// `|mu_n_gk - mu_m_gk|`.
    pub drift: f64,
    /// Largest sampled `|G - G_k| / ((1 + |p|) delta)` on the boundary piece of strip `k`.
    pub projection_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub delta: f64,
    pub nu1: [f64; 2],
    pub nu2: [f64; 2],
    pub theta1: f64,
    pub theta2: f64,
    pub eps: f64,
    pub h: f64,
    pub radius: f64,
    pub n_steps: usize,
    pub m_steps: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub headline_gap: f64,
    pub rows: Vec<ContinuityRow>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// The largest `1/n` not exceeding `limit`.
fn admissible_eps(limit: f64) -> f64 {
    1.0 / (1.0 / limit).ceil()
}

/// Compares the slopes of two directions near `base = e_2` through the projected data `G_k`.
pub fn direction_continuity(
    nu1: &Direction,
    nu2: &Direction,
    delta: f64,
    base: &Direction,
    cfg: &ContinuityConfig,
) -> Result<ContinuityReport> {
    let b = base.planar()?;
    if dist(b, [0.0, 1.0]) > 1e-12 {
        return Err(Error::InvalidInput("the projected data G_k is defined for base = e_2 only".into()));
    }
    let m = (1.0 / delta).round();
    if !(delta > 0.0 && delta < 1.0) || (m * delta - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("delta must be 1/m with m >= 2, got {delta}")));
    }
    let (v1, v2) = (nu1.planar()?, nu2.planar()?);
    let (theta1, theta2) = (dist(v1, b), dist(v2, b));
    let s = delta.powf(2.5);
    let t_base = approx_period_t_s(base, s, cfg.search_cap)?.t;
    let limit = s / t_base;
    for (i, th) in [theta1, theta2].into_iter().enumerate() {
        if !(th > 0.0 && th < limit) {
            return Err(Error::HypothesisViolated(format!(
                "theta_{} = {th:.6} must lie in (0, delta^(5/2)/T) = (0, {limit:.6})",
                i + 1
            )));
        }
    }
    let eps_cap = delta * theta1.min(theta2) / t_base;
    let eps = match cfg.eps {
        Some(e) if e > 0.0 && e <= eps_cap * (1.0 + 1e-12) => e,
        Some(e) => {
            return Err(Error::HypothesisViolated(format!(
                "eps = {e} exceeds delta * theta_i / T = {eps_cap:.6}"
            )))
        }
        None => admissible_eps(eps_cap),
    };
    let n_steps = (delta / theta1).floor() as usize;
    let m_steps = (delta / theta2).floor() as usize;
    if !((n_steps.max(m_steps) as f64) * eps < 1.0) {
        return Err(Error::HypothesisViolated(format!("N eps and M eps must stay below 1 (N = {n_steps}, M = {m_steps}, eps = {eps})")));
    }
    let h = eps * cfg.h_per_eps;
    let problem = |nu: &Direction| -> Result<StripProblem> {
        Ok(StripProblem::new(cfg.f.clone(), cfg.g.clone(), nu.clone(), eps, cfg.q_t)?.with_radius(cfg.radius).with_h(h))
    };
    let (p1, p2) = (problem(nu1)?, problem(nu2)?);
    let (r1, r2) = rayon::join(
        || solve_cell_problem(&p1, DEFAULT_TOL, DEFAULT_MAX_ITER),
        || solve_cell_problem(&p2, DEFAULT_TOL, DEFAULT_MAX_ITER),
    );
    let (u1, _) = r1?;
    let (u2, _) = r2?;
    let mu1 = average_slope(&u1, &p1)?.mu;
    let mu2 = average_slope(&u2, &p2)?.mu;
    let q_flat = [cfg.q_t, 0.0];
    let rows = (1..=m as i64)
        .into_par_iter()
        .map(|k| {
            let local = local_slope(&u1, &p1, n_steps, k)?;
            let mu_n = first_homogenized_slope(&cfg.g, delta, k, n_steps, eps, &cfg.f, q_flat)?;
            let mu_m = first_homogenized_slope(&cfg.g, delta, k, m_steps, eps, &cfg.f, q_flat)?;
            let ratio = projection_ratio(&p1, delta, k, n_steps)?;
            Ok(ContinuityRow {
                k,
                mu_k: local.mu_k,
                mu_n_gk: mu_n,
                mu_m_gk: mu_m,
                gap: (local.mu_k - mu_n).abs(),
                drift: (mu_n - mu_m).abs(),
                projection_ratio: ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContinuityReport {
        delta,
        nu1: v1,
        nu2: v2,
        theta1,
        theta2,
        eps,
        h,
        radius: cfg.radius,
        n_steps,
        m_steps,
        mu1,
        mu2,
        headline_gap: (mu1 - mu2).abs(),
        rows,
    })
}

/// Sampled `|G - G_k| / ((1 + |p|) delta)` on the top boundary inside strip `k`.
fn projection_ratio(p: &StripProblem, delta: f64, k: i64, big_n: usize) -> Result<f64> {
    let gk = project_g_k(&p.g, delta, k)?;
    let nu = p.nu2();
    let t = p.tangent();
    let width = big_n as f64 * p.eps;
    let grads = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 1.0], [2.0, -1.0]];
    let mut worst = 0.0f64;
    for step in 0..=64 {
        let x1 = (k as f64 - 1.0 + step as f64 / 64.0) * width;
        let s = (x1 - p.tau[0]) / t[0];
        let x = [p.tau[0] + s * t[0], p.tau[1] + s * t[1]];
        let y = [x[0] / p.eps, x[1] / p.eps];
        for q in grads {
            let d = (p.g.eval(q, &y, nu)? - gk.eval(q, &y, nu)?).abs();
            worst = worst.max(d / ((1.0 + q[0].hypot(q[1])) * delta));
        }
    }
    Ok(worst)
}
