//! Nonlinear solvers for the discretized strip problem.
//!
//! Constant-coefficient operators without a rotated cross term go through a reduced problem on
//! the top row: the interior is harmonic for the separable operator, so the values below the
//! top follow from the top values through the sine-mode transfer ratios. Everything else runs
//! Newton (policy) iteration on the full grid with GMRES preconditioned by the separable
//! solver. Both use a full step halved until the max-norm residual decreases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{Grid, GridField, NodeTag};
use super::krylov::gmres;
use super::problem::StripProblem;
use super::scheme::{discretize, offset, DiscreteScheme, Stencil, CENTER};
use super::spectral::{SpectralSolver, TopRow as SpectralTop};
use crate::expr::torus_grid;
use crate::operators::BoundaryOperator;
use crate::{Error, Result};

/// Above this the barrier fixed point is declared absent.
pub const BARRIER_CAP: f64 = 1e6;
const BARRIER_SAMPLES: usize = 64;
const MAX_HALVINGS: usize = 30;
const MAX_NEWTON: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    /// Reduced Newton on the top row over the separable interior.
    Spectral,
    /// Full-grid Newton/policy iteration.
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub residual_interior: f64,
    pub residual_neumann: f64,
    /// Nonlinear iterations.
    pub iterations: usize,
    pub linear_iterations: usize,
    /// Largest excess of the solution beyond the barrier envelope (zero when inside).
    pub barrier_violation: f64,
    pub barrier_constant: f64,
    /// Smallest `1 - G_p . nu` over the top rows at the solution.
    pub top_margin: f64,
    pub path: SolverPath,
}

/// `max_y max(|G(q + M nu, y)|, |G(q - M nu, y)|)` over the given points.
fn barrier_sup(g: &BoundaryOperator, q: [f64; 2], nu: [f64; 2], ys: &[[f64; 2]], m: f64) -> Result<f64> {
    let mut sup = 0.0f64;
    for y in ys {
        for s in [m, -m] {
            let v = g.eval([q[0] + s * nu[0], q[1] + s * nu[1]], y, nu)?;
            sup = sup.max(v.abs());
        }
    }
    Ok(sup)
}

/// Smallest `M >= 0` with `sup_y |G(q +- M nu, y)| <= M` over the given points.
pub fn barrier_constant_at(g: &BoundaryOperator, q: [f64; 2], nu: [f64; 2], ys: &[[f64; 2]]) -> Result<f64> {
    let excess = |m: f64| barrier_sup(g, q, nu, ys, m).map(|s| s - m);
    if excess(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while excess(hi)? > 0.0 {
        hi *= 2.0;
        if hi > BARRIER_CAP {
            return Err(Error::NoBarrier { cap: BARRIER_CAP });
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-15 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Barrier constant with the supremum over `y` taken on a dense sample of the torus.
pub fn barrier_constant(g: &BoundaryOperator, q: [f64; 2], nu: [f64; 2]) -> Result<f64> {
    let ys: Vec<[f64; 2]> = if g.depends_on_y() { torus_grid(BARRIER_SAMPLES).collect() } else { vec![[0.0, 0.0]] };
    barrier_constant_at(g, q, nu, &ys)
}

/// Solves the discretized strip problem to `tol` in the max-norm row residual.
pub fn solve_cell_problem(p: &StripProblem, tol: f64, max_iter: usize) -> Result<(GridField, SolveReport)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let scheme = discretize(p)?;
    solve_scheme(&scheme, tol, max_iter)
}

/// [`solve_cell_problem`] on an already discretized problem.
pub fn solve_scheme(scheme: &DiscreteScheme, tol: f64, max_iter: usize) -> Result<(GridField, SolveReport)> {
    let p = &scheme.problem;
    let g = &scheme.grid;
    let mut ys: Vec<[f64; 2]> = scheme.top_fast_vars().to_vec();
    if p.g.depends_on_y() {
        ys.extend(torus_grid(BARRIER_SAMPLES));
    }
    let barrier = barrier_constant_at(&p.g, p.q, g.nu, &ys)?;
    let (u, mut report) = match scheme.separable() {
        Some((a_t, a_n)) => solve_spectral(scheme, a_t, a_n, tol, max_iter)?,
        None => solve_newton(scheme, tol, max_iter)?,
    };
    report.barrier_constant = barrier;
    let (lo_off, hi_off) = (p.bottom_offset.min(p.lateral_offset), p.bottom_offset.max(p.lateral_offset));
    let mut excess = 0.0f64;
    for j in 0..=g.ny {
        let depth = barrier * (g.r(j) + 1.0);
        for i in 0..=g.nx {
            let v = u[g.idx(i, j)] - p.q_dot(g.point(i, j));
            excess = excess.max(v - hi_off - depth).max(lo_off - depth - v);
        }
    }
    report.barrier_violation = excess;
    if excess > 10.0 * tol {
        return Err(Error::BarrierViolation { excess });
    }
    Ok((GridField::new(g.clone(), u), report))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Forcing term for the inner linear solve.
fn inner_tolerance(residual: f64, tol: f64) -> f64 {
    (0.1 * tol / residual).clamp(1e-12, 1e-3)
}

struct Reduced<'a> {
    scheme: &'a DiscreteScheme,
    solver: SpectralSolver,
    rho: Vec<f64>,
    /// Lateral data of the correction `w = u - q.x - bottom_offset`.
    lateral: f64,
    /// Below-top values of the correction with zero top data.
    below_particular: Vec<f64>,
    /// `q.x + bottom_offset` on the top row and on the row below, `i = 0..=nx`.
    base_top: Vec<f64>,
    base_below: Vec<f64>,
}

impl Reduced<'_> {
    fn transfer(&self, v: &[f64]) -> Vec<f64> {
        let mut t = v.to_vec();
        self.solver.forward(&mut t);
        t.iter_mut().zip(&self.rho).for_each(|(x, r)| *x *= r);
        self.solver.inverse(&mut t);
        t
    }

    /// Right-hand side of the Dirichlet problem for the correction with the given top values.
    fn dirichlet_rhs(&self, top: &[f64]) -> Vec<f64> {
        let (m, ny, h) = (self.solver.modes(), self.solver.ny, self.solver.h);
        let mut rhs = vec![0.0; m * ny];
        let lat = self.solver.a_t * self.lateral / (h * h);
        for row in rhs.chunks_mut(m).take(ny - 1) {
            row[0] += lat;
            row[m - 1] += lat;
        }
        rhs[(ny - 1) * m..].copy_from_slice(top);
        rhs
    }

    /// Top rows for the top correction values `wt`.
    fn rows(&self, wt: &[f64]) -> Result<Vec<super::scheme::TopRow>> {
        let m = wt.len();
        let pw = self.transfer(wt);
        (1..=m)
            .into_par_iter()
            .map(|i| {
                let at = |k: usize| if k == 0 || k == m + 1 { self.lateral } else { wt[k - 1] };
                let below = self.below_particular[i - 1] + pw[i - 1];
                self.scheme.top_row_local(
                    i,
                    self.base_top[i] + at(i),
                    self.base_top[i - 1] + at(i - 1),
                    self.base_top[i + 1] + at(i + 1),
                    self.base_below[i] + below,
                )
            })
            .collect()
    }
}

fn solve_spectral(scheme: &DiscreteScheme, a_t: f64, a_n: f64, tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)> {
    let g = &scheme.grid;
    let p = &scheme.problem;
    let (nx, ny, h) = (g.nx, g.ny, g.h);
    let m = nx - 1;
    let solver = SpectralSolver::new(a_t, a_n, h, nx, ny);
    let rho = solver.transfer_ratios();
    let base = |i: usize, j: usize| p.q_dot(g.point(i, j)) + p.bottom_offset;
    let mut red = Reduced {
        scheme,
        rho,
        lateral: p.lateral_offset - p.bottom_offset,
        below_particular: vec![0.0; m],
        base_top: (0..=nx).map(|i| base(i, ny)).collect(),
        base_below: (0..=nx).map(|i| base(i, ny - 1)).collect(),
        solver,
    };
    if red.lateral != 0.0 {
        let mut part = red.dirichlet_rhs(&vec![0.0; m]);
        red.solver.solve(&mut part, SpectralTop::Dirichlet);
        red.below_particular = part[(ny - 2) * m..(ny - 1) * m].to_vec();
    }

    let mut wt = vec![0.0; m];
    let mut rows = red.rows(&wt)?;
    let mut res = rows.iter().fold(0.0f64, |a, r| a.max(r.value.abs()));
    let (mut newton, mut linear) = (0, 0);
    let target = 0.5 * tol;
    while res > target {
        if newton >= max_iter.min(MAX_NEWTON) {
            return Err(Error::NoConvergence { iterations: newton, residual: res });
        }
        newton += 1;
        let rhs: Vec<f64> = rows.iter().map(|r| -r.value).collect();
        let mean_margin = rows.iter().map(|r| r.margin).sum::<f64>() / m as f64;
        let diag: Vec<f64> = red.rho.iter().map(|r| mean_margin * (1.0 - r) / h).collect();
        let mut apply = |v: &[f64], out: &mut [f64]| {
            let pv = red.transfer(v);
            for k in 0..m {
                let r = &rows[k];
                let mut s = r.center * v[k] + r.below * pv[k];
                if k > 0 {
                    s += r.west * v[k - 1];
                }
                if k + 1 < m {
                    s += r.east * v[k + 1];
                }
                out[k] = s;
            }
        };
        let mut precond = |v: &mut [f64]| {
            red.solver.forward(v);
            v.iter_mut().zip(&diag).for_each(|(x, d)| *x /= d);
            red.solver.inverse(v);
        };
        let mut step = vec![0.0; m];
        let stats = gmres(&mut apply, &mut precond, &rhs, &mut step, inner_tolerance(res, target), 60, 600);
        linear += stats.iterations;
        let mut alpha = 1.0;
        let mut halvings = 0;
        loop {
            let trial: Vec<f64> = wt.iter().zip(&step).map(|(w, d)| w + alpha * d).collect();
            let trial_rows = red.rows(&trial)?;
            let trial_res = trial_rows.iter().fold(0.0f64, |a, r| a.max(r.value.abs()));
            if trial_res < res {
                wt = trial;
                rows = trial_rows;
                res = trial_res;
                break;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::NoConvergence { iterations: newton, residual: res });
            }
            alpha *= 0.5;
        }
    }

    // Reconstruct the correction, then one residual-correction pass.
    let mut w = red.dirichlet_rhs(&wt);
    red.solver.solve(&mut w, SpectralTop::Dirichlet);
    let interior_residual = |w: &[f64]| -> Vec<f64> {
        let lat = red.lateral;
        let mut r = vec![0.0; m * ny];
        r.par_chunks_mut(m).enumerate().take(ny - 1).for_each(|(jj, row)| {
            let at = |i: isize, j: usize| -> f64 {
                if i < 0 || i >= m as isize {
                    lat
                } else if j == usize::MAX {
                    0.0
                } else {
                    w[j * m + i as usize]
                }
            };
            let below = if jj == 0 { usize::MAX } else { jj - 1 };
            for (i, out) in row.iter_mut().enumerate() {
                let ii = i as isize;
                let c = at(ii, jj);
                *out = -a_t * (at(ii + 1, jj) - 2.0 * c + at(ii - 1, jj)) / (h * h)
                    - a_n * (at(ii, jj + 1) - 2.0 * c + at(ii, below)) / (h * h);
            }
        });
        r
    };
    let mut corr = interior_residual(&w);
    red.solver.solve(&mut corr, SpectralTop::Dirichlet);
    w.iter_mut().zip(&corr).for_each(|(a, b)| *a -= b);
    let residual_interior = max_abs(&interior_residual(&w));

    let mut u = vec![0.0; g.len()];
    for j in 0..=ny {
        for i in 0..=nx {
            let k = g.idx(i, j);
            u[k] = match g.tag(i, j) {
                NodeTag::DirichletBottom | NodeTag::Lateral => scheme.dirichlet_value(i, j),
                _ => base(i, j) + w[g.free_idx(i, j)],
            };
        }
    }
    let (top_res, margin) = top_residual(scheme, &u)?;
    Ok((
        u,
        SolveReport {
            residual_interior,
            residual_neumann: top_res,
            iterations: newton,
            linear_iterations: linear,
            barrier_violation: 0.0,
            barrier_constant: 0.0,
            top_margin: margin,
            path: SolverPath::Spectral,
        },
    ))
}

fn top_residual(scheme: &DiscreteScheme, u: &[f64]) -> Result<(f64, f64)> {
    let rows: Vec<_> = (1..scheme.grid.nx).into_par_iter().map(|i| scheme.top_row(u, i)).collect::<Result<_>>()?;
    Ok(rows.iter().fold((0.0f64, f64::INFINITY), |(r, mg), t| (r.max(t.value.abs()), mg.min(t.margin))))
}

/// Residual and Jacobian rows on the free nodes, in free-index order.
fn linearize(scheme: &DiscreteScheme, u: &[f64]) -> Result<(Vec<f64>, Vec<Stencil>, f64)> {
    let g = &scheme.grid;
    let (nx, ny) = (g.nx, g.ny);
    let rows: Vec<Result<Vec<(f64, Stencil, f64)>>> = (1..=ny)
        .into_par_iter()
        .map(|j| {
            (1..nx)
                .map(|i| {
                    if j < ny {
                        let (v, w) = scheme.interior_row(u, i, j);
                        Ok((v, w, f64::INFINITY))
                    } else {
                        let t = scheme.top_row(u, i)?;
                        let mut w = [0.0; 9];
                        w[CENTER] = t.center;
                        w[3] = t.west;
                        w[5] = t.east;
                        w[1] = t.below;
                        Ok((t.value, w, t.margin))
                    }
                })
                .collect()
        })
        .collect();
    let mut res = Vec::with_capacity(g.free_len());
    let mut jac = Vec::with_capacity(g.free_len());
    let mut margin = f64::INFINITY;
    for row in rows {
        for (v, w, mg) in row? {
            res.push(v);
            jac.push(w);
            margin = margin.min(mg);
        }
    }
    Ok((res, jac, margin))
}

fn apply_jacobian(g: &Grid, jac: &[Stencil], v: &[f64], out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    let m = nx - 1;
    out.par_chunks_mut(m).enumerate().for_each(|(jj, row)| {
        let j = jj + 1;
        for (ii, o) in row.iter_mut().enumerate() {
            let i = ii + 1;
            let w = &jac[jj * m + ii];
            let mut s = 0.0;
            for (k, &wk) in w.iter().enumerate() {
                if wk == 0.0 {
                    continue;
                }
                let (di, dj) = offset(k);
                let (ni, nj) = (i as isize + di, j as isize + dj);
                if ni >= 1 && ni < nx as isize && nj >= 1 && nj <= ny as isize {
                    s += wk * v[g.free_idx(ni as usize, nj as usize)];
                }
            }
            *o = s;
        }
    });
}

/// Separable approximation of the linearization used as a preconditioner.
fn separable_fit(g: &Grid, jac: &[Stencil]) -> SpectralSolver {
    let interior = &jac[..(g.nx - 1) * (g.ny - 1)];
    let scale = 0.5 * g.h * g.h / interior.len().max(1) as f64;
    let mean = |ks: [usize; 6]| -interior.iter().map(|w| ks.iter().map(|&k| w[k]).sum::<f64>()).sum::<f64>() * scale;
    let a_t = mean([3, 5, 0, 2, 6, 8]);
    let a_n = mean([1, 7, 0, 2, 6, 8]);
    SpectralSolver::new(a_t.max(1e-12), a_n.max(1e-12), g.h, g.nx, g.ny)
}

fn solve_newton(scheme: &DiscreteScheme, tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)> {
    let g = &scheme.grid;
    let mut u = scheme.initial_guess();
    let free: Vec<usize> = (1..=g.ny).flat_map(|j| (1..g.nx).map(move |i| g.idx(i, j))).collect();
    let (mut res, mut jac, mut margin) = linearize(scheme, &u)?;
    let mut rn = max_abs(&res);
    let (mut newton, mut linear) = (0, 0);
    let m = g.nx - 1;
    while rn > tol {
        if newton >= max_iter.min(MAX_NEWTON) {
            return Err(Error::NoConvergence { iterations: newton, residual: rn });
        }
        newton += 1;
        let pre = separable_fit(g, &jac);
        let top = &jac[m * (g.ny - 1)..];
        let beta = top.iter().map(|w| -w[1]).sum::<f64>() / top.len() as f64 * g.h;
        let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
        let mut step = vec![0.0; rhs.len()];
        let stats = gmres(
            &mut |v: &[f64], out: &mut [f64]| apply_jacobian(g, &jac, v, out),
            &mut |v: &mut [f64]| pre.solve(v, SpectralTop::Neumann { beta: beta.max(1e-12) }),
            &rhs,
            &mut step,
            inner_tolerance(rn, tol),
            40,
            400,
        );
        linear += stats.iterations;
        let mut alpha = 1.0;
        let mut halvings = 0;
        loop {
            let mut trial = u.clone();
            for (k, &node) in free.iter().enumerate() {
                trial[node] += alpha * step[k];
            }
            let (tr, tj, tm) = linearize(scheme, &trial)?;
            let trn = max_abs(&tr);
            if trn < rn {
                u = trial;
                res = tr;
                jac = tj;
                margin = tm;
                rn = trn;
                break;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::NoConvergence { iterations: newton, residual: rn });
            }
            alpha *= 0.5;
        }
    }
    let (ri, rt) = scheme.residuals(&u)?;
    Ok((
        u,
        SolveReport {
            residual_interior: ri,
            residual_neumann: rt,
            iterations: newton,
            linear_iterations: linear,
            barrier_violation: 0.0,
            barrier_constant: 0.0,
            top_margin: margin,
            path: SolverPath::Newton,
        },
    ))
}
