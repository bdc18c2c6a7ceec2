//! Experiment runners: each writes its tables into the output directory and returns verdicts.

use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use strip_homog::homogenize::{
    average_slope, direction_continuity, epsilon_sweep, lipschitz_in_q, q_lipschitz_bound, ContinuityConfig, RateCurve,
};
use strip_homog::lattice::{approx_period_t_s, default_n_candidates, discrepancy, omega_nu, rate_function_lambda, period_t};
use strip_homog::operators::{validate_f, validate_g, ValidationReport};
use strip_homog::strip::solve_cell_problem;

use crate::config::{direction, ExperimentConfig};
use crate::output::{loglog_svg, write_atomic, write_csv, Series, Verdict};
use crate::CliError;

#[derive(Serialize)]
struct FieldRow {
    x1: f64,
    x2: f64,
    tangent_coord: f64,
    normal_coord: f64,
    value: f64,
    tag: &'static str,
}

#[derive(Serialize)]
struct SolveRow {
    nu_1: f64,
    nu_2: f64,
    tau_1: f64,
    tau_2: f64,
    q_t: f64,
    epsilon: f64,
    h: f64,
    #[serde(rename = "R")]
    radius: f64,
    tol: f64,
    mu: f64,
    mu_midplane: f64,
    residual_fit: f64,
    residual_interior: f64,
    residual_neumann: f64,
    iterations: usize,
    linear_iterations: usize,
    barrier_constant: f64,
    barrier_violation: f64,
    top_margin: f64,
    path: String,
}

pub fn solve(cfg: &ExperimentConfig, out: &Path, skip_validate: bool) -> Result<Vec<Verdict>, CliError> {
    let p = cfg.problem(skip_validate)?;
    let tol = cfg.numerics.tol;
    let (u, rep) = solve_cell_problem(&p, tol, cfg.numerics.max_iter)?;
    let est = average_slope(&u, &p)?;
    let g = &u.grid;
    let mut field = Vec::with_capacity(g.len());
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let x = g.point(i, j);
            field.push(FieldRow { x1: x[0], x2: x[1], tangent_coord: g.s(i), normal_coord: g.r(j), value: u.at(i, j), tag: g.tag(i, j).as_str() });
        }
    }
    write_csv(&out.join("field.csv"), &field)?;
    let n = p.nu2();
    let row = SolveRow {
        nu_1: n[0],
        nu_2: n[1],
        tau_1: p.tau[0],
        tau_2: p.tau[1],
        q_t: p.q_t(),
        epsilon: p.eps,
        h: p.h,
        radius: p.radius,
        tol,
        mu: est.mu,
        mu_midplane: est.mu_midplane,
        residual_fit: est.residual_fit,
        residual_interior: rep.residual_interior,
        residual_neumann: rep.residual_neumann,
        iterations: rep.iterations,
        linear_iterations: rep.linear_iterations,
        barrier_constant: rep.barrier_constant,
        barrier_violation: rep.barrier_violation,
        top_margin: rep.top_margin,
        path: format!("{:?}", rep.path).to_lowercase(),
    };
    write_csv(&out.join("report.csv"), &[row])?;
    println!("mu = {:.10} (midplane {:.10}, fit residual {:.3e})", est.mu, est.mu_midplane, est.residual_fit);
    let mut v = vec![Verdict::at_most("solve residual", rep.residual_interior.max(rep.residual_neumann), tol)];
    if let Some(expected) = cfg.assertions.mu {
        let bound = cfg.assertions.mu_tol.unwrap_or(5.0 * p.h);
        v.push(Verdict::at_most(format!("|mu - {expected}|"), (est.mu - expected).abs(), bound));
    }
    Ok(v)
}

/// One row per sweep entry, self-contained.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub nu_1: f64,
    pub nu_2: f64,
    pub tau_1: f64,
    pub tau_2: f64,
    pub q_t: f64,
    pub epsilon: f64,
    pub h: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub mu: f64,
    pub lambda_bound: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Least-squares `C` in `dev ~ C * bound` and the largest relative excess of a deviation over `C * bound`.
pub fn rate_fit(points: &[(f64, f64, f64)]) -> (f64, f64) {
    let num: f64 = points.iter().map(|(_, d, b)| d * b).sum();
    let den: f64 = points.iter().map(|(_, _, b)| b * b).sum();
    let c = if den > 0.0 { num / den } else { 0.0 };
    let excess = points.iter().map(|(_, d, b)| if c * b > 0.0 { (d - c * b) / (c * b) } else { f64::INFINITY }).fold(0.0f64, f64::max);
    (c, excess)
}

/// Log-log plot of the deviations against `eps` with the fitted `C * Lambda` curve.
pub fn rate_svg(title: &str, points: &[(f64, f64, f64)]) -> String {
    let (c, _) = rate_fit(points);
    let dev: Vec<(f64, f64)> = points.iter().map(|&(e, d, _)| (e, d)).collect();
    let reference: Vec<(f64, f64)> = points.iter().map(|&(e, _, b)| (e, c * b)).collect();
    loglog_svg(
        title,
        "eps",
        "|mu - mu_ref|",
        &[
            Series { label: "deviation", points: &dev, color: "#1f5fa8", line: false },
            Series { label: "C * Lambda(eps)", points: &reference, color: "#c0392b", line: true },
        ],
    )
}

/// `(eps, deviation, bound)` for every entry but the finest.
pub fn curve_points(curve: &RateCurve) -> Vec<(f64, f64, f64)> {
    let n = curve.entries.len().saturating_sub(1);
    curve.entries[..n].iter().map(|e| (e.eps, (e.mu - curve.mu_ref).abs(), e.lambda_bound)).collect()
}

/// The same points rebuilt from CSV rows of one curve.
pub fn curve_points_from_rows(rows: &[&SweepRow]) -> Vec<(f64, f64, f64)> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let Some(finest) = sorted.last() else { return Vec::new() };
    let mu_ref = finest.mu;
    sorted[..sorted.len() - 1].iter().map(|r| (r.epsilon, (r.mu - mu_ref).abs(), r.lambda_bound)).collect()
}

pub fn sweep(cfg: &ExperimentConfig, out: &Path, skip_validate: bool) -> Result<Vec<Verdict>, CliError> {
    let eps_list = &cfg.numerics.eps_list;
    if eps_list.len() < 3 {
        return Err(CliError::Config("a sweep needs \"eps_list\" with at least three values".into()));
    }
    let mut cfg = cfg.clone();
    cfg.numerics.eps = eps_list[0];
    let template = cfg.problem(skip_validate)?;
    let curve = epsilon_sweep(&template, eps_list)?;
    let rows: Vec<SweepRow> = curve
        .entries
        .iter()
        .map(|e| SweepRow {
            nu_1: curve.nu[0],
            nu_2: curve.nu[1],
            tau_1: curve.tau[0],
            tau_2: curve.tau[1],
            q_t: curve.q_t,
            epsilon: e.eps,
            h: e.h,
            radius: e.radius,
            mu: e.mu,
            lambda_bound: e.lambda_bound,
            residual: e.residual,
            iterations: e.iterations,
        })
        .collect();
    write_csv(&out.join("sweep.csv"), &rows)?;
    let pts = curve_points(&curve);
    let title = format!("nu = ({:.4}, {:.4}), q_t = {}", curve.nu[0], curve.nu[1], curve.q_t);
    write_atomic(&out.join("rate.svg"), rate_svg(&title, &pts).as_bytes())?;
    let exponent = curve.fitted_exponent.unwrap_or(f64::NAN);
    let (c, excess) = rate_fit(&pts);
    println!("fitted_exponent = {exponent:.4}, C = {c:.4e}, mu_ref = {:.10}", curve.mu_ref);
    let mut v = vec![Verdict::at_least("fitted exponent", exponent, cfg.assertions.min_exponent.unwrap_or(0.4))];
    if let Some(r) = cfg.assertions.max_fit_residual {
        v.push(Verdict::at_most("deviation excess over C * Lambda", excess, r));
    }
    Ok(v)
}

/// One row per `(delta, k)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuityCsvRow {
    pub delta: f64,
    pub theta_1: f64,
    pub theta_2: f64,
    #[serde(rename = "N")]
    pub n_steps: usize,
    #[serde(rename = "M")]
    pub m_steps: usize,
    pub k: i64,
    pub mu_k: f64,
    #[serde(rename = "mu_N_Gk")]
    pub mu_n_gk: f64,
    pub headline_gap: f64,
    #[serde(rename = "mu_M_Gk")]
    pub mu_m_gk: f64,
    pub gap: f64,
    pub drift: f64,
    pub projection_ratio: f64,
    pub nu1_1: f64,
    pub nu1_2: f64,
    pub nu2_1: f64,
    pub nu2_2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub epsilon: f64,
    pub h: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub q_t: f64,
}

/// `(delta, headline gap)` pairs ordered by decreasing `delta`, one per distinct `delta`.
pub fn gaps_by_delta(rows: &[ContinuityCsvRow]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        if !out.iter().any(|(d, _)| *d == r.delta) {
            out.push((r.delta, r.headline_gap));
        }
    }
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

pub fn continuity(cfg: &ExperimentConfig, out: &Path, skip_validate: bool) -> Result<Vec<Verdict>, CliError> {
    if cfg.continuity.is_empty() {
        return Err(CliError::Config("a continuity run needs a nonempty \"continuity\" list".into()));
    }
    let base = direction(&[0.0, 1.0])?;
    let f = cfg.operator()?;
    let g = cfg.boundary([0.0, 1.0])?;
    if !skip_validate {
        cfg.validate_operators(&f, &g, [0.0, 1.0])?;
    }
    let mut rows = Vec::new();
    for case in &cfg.continuity {
        let (nu1, nu2) = (direction(&case.nu1)?, direction(&case.nu2)?);
        let mut cc = ContinuityConfig::new(f.clone(), g.clone());
        cc.q_t = cfg.geometry.q_t;
        cc.eps = case.eps;
        cc.h_per_eps = cfg.numerics.h_per_eps;
        cc.radius = cfg.numerics.radius;
        let rep = direction_continuity(&nu1, &nu2, case.delta, &base, &cc)?;
        println!(
            "delta = {}: eps = {:.6}, N = {}, M = {}, headline gap = {:.4e}",
            rep.delta, rep.eps, rep.n_steps, rep.m_steps, rep.headline_gap
        );
        for r in &rep.rows {
            rows.push(ContinuityCsvRow {
                delta: rep.delta,
                theta_1: rep.theta1,
                theta_2: rep.theta2,
                n_steps: rep.n_steps,
                m_steps: rep.m_steps,
                k: r.k,
                mu_k: r.mu_k,
                mu_n_gk: r.mu_n_gk,
                headline_gap: rep.headline_gap,
                mu_m_gk: r.mu_m_gk,
                gap: r.gap,
                drift: r.drift,
                projection_ratio: r.projection_ratio,
                nu1_1: rep.nu1[0],
                nu1_2: rep.nu1[1],
                nu2_1: rep.nu2[0],
                nu2_2: rep.nu2[1],
                mu1: rep.mu1,
                mu2: rep.mu2,
                epsilon: rep.eps,
                h: rep.h,
                radius: rep.radius,
                q_t: cc.q_t,
            });
        }
    }
    write_csv(&out.join("continuity.csv"), &rows)?;
    let gaps = gaps_by_delta(&rows);
    let mut v = Vec::new();
    for w in gaps.windows(2) {
        v.push(Verdict::at_most(format!("headline gap at delta {} vs delta {}", w[1].0, w[0].0), w[1].1, w[0].1));
    }
    if let Some(bound) = cfg.assertions.max_gap {
        for (d, gap) in &gaps {
            v.push(Verdict::at_most(format!("headline gap at delta {d}"), *gap, bound));
        }
    }
    Ok(v)
}

#[derive(Serialize)]
struct LipschitzRow {
    nu_1: f64,
    nu_2: f64,
    tau_1: f64,
    tau_2: f64,
    epsilon: f64,
    h: f64,
    #[serde(rename = "R")]
    radius: f64,
    q_t_1: f64,
    q_t_2: f64,
    ratio: f64,
    bound: f64,
}

pub fn lipschitz(cfg: &ExperimentConfig, out: &Path, skip_validate: bool) -> Result<Vec<Verdict>, CliError> {
    let p = cfg.problem(skip_validate)?;
    let spec = cfg.lipschitz.clone().unwrap_or(crate::config::LipschitzSpec { pairs: vec![], count: 10, q_max: 2.0 });
    let pairs = if spec.pairs.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.numerics.seed);
        (0..spec.count)
            .map(|_| loop {
                let a = rng.random_range(-spec.q_max..spec.q_max);
                let b = rng.random_range(-spec.q_max..spec.q_max);
                if (a - b).abs() > 1e-3 {
                    break (a, b);
                }
            })
            .collect()
    } else {
        spec.pairs.clone()
    };
    let ratios = lipschitz_in_q(&p, &pairs)?;
    let bound = q_lipschitz_bound(&p.g);
    let n = p.nu2();
    let rows: Vec<LipschitzRow> = pairs
        .iter()
        .zip(&ratios)
        .map(|(&(a, b), &ratio)| LipschitzRow {
            nu_1: n[0],
            nu_2: n[1],
            tau_1: p.tau[0],
            tau_2: p.tau[1],
            epsilon: p.eps,
            h: p.h,
            radius: p.radius,
            q_t_1: a,
            q_t_2: b,
            ratio,
            bound,
        })
        .collect();
    write_csv(&out.join("lipschitz.csv"), &rows)?;
    let slack = 1.0 + cfg.assertions.lipschitz_slack.unwrap_or(0.1);
    let worst = ratios.iter().copied().fold(0.0f64, f64::max);
    Ok(vec![Verdict::at_most(format!("max Lipschitz ratio over {} pairs", ratios.len()), worst, bound * slack)])
}

#[derive(Serialize)]
struct ValidateRow {
    operator: &'static str,
    check: &'static str,
    samples: usize,
    violations: usize,
    worst_slack: f64,
    attained: f64,
    seed: u64,
}

pub fn validate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Verdict>, CliError> {
    let n = direction(&cfg.geometry.nu)?.planar().map_err(|e| CliError::Config(e.to_string()))?;
    let f = cfg.operator()?;
    let g = cfg.boundary(n)?;
    let (samples, seed) = (cfg.numerics.validation_samples, cfg.numerics.seed);
    let reports: [(&'static str, ValidationReport); 2] = [("F", validate_f(&f, samples, seed)), ("G", validate_g(&g, n, samples, seed))];
    let mut rows = Vec::new();
    let mut v = Vec::new();
    for (who, rep) in &reports {
        for c in &rep.checks {
            rows.push(ValidateRow {
                operator: who,
                check: c.name,
                samples: c.samples,
                violations: c.violations,
                worst_slack: c.worst_slack,
                attained: c.attained,
                seed,
            });
            v.push(Verdict::at_most(format!("{who} {} violations", c.name), c.violations as f64, 0.0));
        }
    }
    write_csv(&out.join("validate.csv"), &rows)?;
    Ok(v)
}

#[derive(Serialize)]
struct LatticeRow {
    quantity: &'static str,
    nu_1: f64,
    nu_2: f64,
    x: Option<f64>,
    n: Option<usize>,
    s: Option<f64>,
    epsilon: Option<f64>,
    value: f64,
}

pub fn lattice(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Verdict>, CliError> {
    let d = direction(&cfg.geometry.nu)?;
    let nu = d.planar().map_err(|e| CliError::Config(e.to_string()))?;
    let spec = cfg.lattice.clone().ok_or_else(|| CliError::Config("missing \"lattice\" section".into()))?;
    let row = |quantity, value| LatticeRow { quantity, nu_1: nu[0], nu_2: nu[1], x: None, n: None, s: None, epsilon: None, value };
    let mut rows = Vec::new();
    let mut v = Vec::new();
    if let Ok(t) = period_t(&d) {
        rows.push(row("period_t", t));
    }
    for &x in &spec.x_values {
        for &n in &spec.n_values {
            if n == 0 {
                return Err(CliError::Config("N must be positive".into()));
            }
            rows.push(LatticeRow { x: Some(x), n: Some(n), ..row("discrepancy", discrepancy(x, n)) });
        }
    }
    for &n in spec.n_values.iter().filter(|&&n| n > 0) {
        rows.push(LatticeRow { n: Some(n), ..row("omega_nu", omega_nu(&d, n)) });
    }
    for &s in &spec.s_values {
        let ap = approx_period_t_s(&d, s, spec.search_cap)?;
        rows.push(LatticeRow { s: Some(s), ..row("approx_period_t_s", ap.t) });
        v.push(Verdict::at_most(format!("T(s = {s})"), ap.t, ap.bound));
    }
    for &eps in &spec.eps_values {
        let lam = rate_function_lambda(eps, &d, &default_n_candidates())?;
        rows.push(LatticeRow { epsilon: Some(eps), ..row("rate_lambda", lam.lambda_value) });
    }
    write_csv(&out.join("lattice.csv"), &rows)?;
    Ok(v)
}
