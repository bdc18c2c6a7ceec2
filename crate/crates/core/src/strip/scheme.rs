//! Monotone finite-difference rows for the strip problem.
//!
//! Interior rows use a 9-point stencil in the rotated frame. Stencil weights are stored as
//! `[f64; 9]` indexed by `(dj + 1) * 3 + (di + 1)`, where `di` steps along the tangent and `dj`
//! along the normal, so that the row value is `sum_k w_k u_k`. A row is monotone when the
//! centre weight is nonnegative and every neighbour weight is nonpositive.

use rayon::prelude::*;

use super::grid::{Grid, NodeTag};
use super::problem::StripProblem;
use crate::operators::{pucci_minus_policy, pucci_plus_policy, BoundaryOperator, EllipticFamily, Sym2};
use crate::{Error, Result};

pub type Stencil = [f64; 9];

pub const CENTER: usize = 4;

/// `(di, dj)` offset of stencil slot `k`.
#[inline]
pub fn offset(k: usize) -> (isize, isize) {
    ((k % 3) as isize - 1, (k / 3) as isize - 1)
}

#[inline]
fn slot(di: isize, dj: isize) -> usize {
    ((dj + 1) * 3 + (di + 1)) as usize
}

/// Largest anisotropy ratio for which every rotation of an admissible matrix stays diagonally dominant.
pub const MAX_PUCCI_RATIO: f64 = 3.0 + 2.0 * std::f64::consts::SQRT_2;

const DOMINANCE_SLACK: f64 = 1e-12;

/// Row weights of `-tr(A D^2 u)` for a frame matrix `a`, or the reason it is not monotone.
pub fn monotone_stencil(a: &Sym2, h: f64) -> std::result::Result<Stencil, String> {
    let c = a.xy.abs();
    let scale = a.xx.abs().max(a.yy.abs()).max(1.0);
    if a.xx - c < -DOMINANCE_SLACK * scale || a.yy - c < -DOMINANCE_SLACK * scale {
        return Err(format!(
            "rotated coefficients ({:.6}, {:.6}, {:.6}) are not diagonally dominant",
            a.xx, a.xy, a.yy
        ));
    }
    let inv = 1.0 / (h * h);
    let mut w = [0.0; 9];
    w[slot(1, 0)] = -(a.xx - c) * inv;
    w[slot(-1, 0)] = -(a.xx - c) * inv;
    w[slot(0, 1)] = -(a.yy - c) * inv;
    w[slot(0, -1)] = -(a.yy - c) * inv;
    if a.xy >= 0.0 {
        w[slot(1, 1)] = -c * inv;
        w[slot(-1, -1)] = -c * inv;
    } else {
        w[slot(-1, 1)] = -c * inv;
        w[slot(1, -1)] = -c * inv;
    }
    w[CENTER] = 2.0 * (a.xx + a.yy - c) * inv;
    Ok(w)
}

#[inline]
fn apply(w: &Stencil, nb: &[f64; 9]) -> f64 {
    w.iter().zip(nb).map(|(a, b)| a * b).sum()
}

/// Interior discretization selected from the operator family.
#[derive(Debug, Clone)]
enum Interior {
    Constant(Stencil),
    /// Per interior node, row-major over `j = 1..ny-1`, `i = 1..nx-1`.
    Variable(Vec<Stencil>),
    Pucci { plus: bool, lambda: f64, big_lambda: f64 },
    Isaacs,
}

/// Result of the row-sign check performed when the scheme is built.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub interior_rows: usize,
    /// Smallest `min(a_tt, a_nn) - |a_tn|` over the checked interior matrices.
    pub min_dominance: f64,
    /// Declared bound on `G_p . nu`; top rows are monotone while it stays below 1.
    pub oblique_bound: f64,
}

/// Linearization of a top row in the unknowns `(i-1, ny)`, `(i, ny)`, `(i+1, ny)`, `(i, ny-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopRow {
    pub value: f64,
    pub west: f64,
    pub center: f64,
    pub east: f64,
    pub below: f64,
    /// `1 - G_p . nu` at the evaluation point.
    pub margin: f64,
}

/// A discretized strip problem.
#[derive(Debug, Clone)]
pub struct DiscreteScheme {
    pub problem: StripProblem,
    pub grid: Grid,
    pub certificate: Certificate,
    interior: Interior,
    /// Fast variable `x / eps` at each top node `i = 0..=nx`.
    top_y: Vec<[f64; 2]>,
}

/// Builds the monotone scheme, refusing with `NonMonotone` when a row fails the sign check.
pub fn discretize(p: &StripProblem) -> Result<DiscreteScheme> {
    p.validate()?;
    let grid = p.grid()?;
    let (t, n) = (grid.tangent, grid.nu);
    let h = grid.h;
    let interior_rows = (grid.nx - 1) * (grid.ny - 1);
    let dominance = |a: &Sym2| a.xx.min(a.yy) - a.xy.abs();
    let (interior, min_dom) = match &p.f.family {
        EllipticFamily::Linear { a } => {
            if let Some(c) = a.as_constant() {
                let fa = c.in_frame(t, n);
                let w = monotone_stencil(&fa, h).map_err(|reason| Error::NonMonotone { i: 1, j: 1, reason })?;
                (Interior::Constant(w), dominance(&fa))
            } else {
                let stencils: Vec<Stencil> = (1..grid.ny)
                    .into_par_iter()
                    .flat_map_iter(|j| {
                        let grid = &grid;
                        (1..grid.nx).map(move |i| {
                            let fa = a.eval(&fast_var(grid.point(i, j), p.eps)).in_frame(t, n);
                            monotone_stencil(&fa, h).map_err(|reason| Error::NonMonotone { i, j, reason })
                        })
                    })
                    .collect::<Result<_>>()?;
                let min_dom = stencils.iter().map(|w| -w[slot(1, 0)].max(w[slot(0, 1)]) * h * h).fold(f64::INFINITY, f64::min);
                (Interior::Variable(stencils), min_dom)
            }
        }
        EllipticFamily::PucciPlus | EllipticFamily::PucciMinus => {
            let ratio = p.f.big_lambda / p.f.lambda;
            if ratio > MAX_PUCCI_RATIO {
                return Err(Error::NonMonotone {
                    i: 1,
                    j: 1,
                    reason: format!("Lambda/lambda = {ratio:.4} exceeds the 9-point limit {MAX_PUCCI_RATIO:.4}"),
                });
            }
            let (a, b) = (p.f.lambda, p.f.big_lambda);
            let interior = Interior::Pucci { plus: matches!(p.f.family, EllipticFamily::PucciPlus), lambda: a, big_lambda: b };
            (interior, 0.5 * (a + b) - (b - a) / std::f64::consts::SQRT_2)
        }
        EllipticFamily::BellmanIsaacs { controls } => {
            let worst = (1..grid.ny)
                .into_par_iter()
                .map(|j| {
                    let mut worst = (f64::INFINITY, 0, 0, String::new());
                    for i in 1..grid.nx {
                        let y = fast_var(grid.point(i, j), p.eps);
                        for a in controls.iter().flatten() {
                            let fa = a.eval(&y).in_frame(t, n);
                            let d = dominance(&fa);
                            if d < worst.0 {
                                let reason = monotone_stencil(&fa, h).err().unwrap_or_default();
                                worst = (d, i, j, reason);
                            }
                        }
                    }
                    worst
                })
                .reduce(|| (f64::INFINITY, 0, 0, String::new()), |a, b| if b.0 < a.0 { b } else { a });
            if !worst.3.is_empty() {
                return Err(Error::NonMonotone { i: worst.1, j: worst.2, reason: worst.3 });
            }
            (Interior::Isaacs, worst.0)
        }
    };
    if p.g.c_obliq >= 1.0 {
        return Err(Error::NonMonotone { i: 0, j: grid.ny, reason: "oblique bound c >= 1".into() });
    }
    let top_y = (0..=grid.nx).map(|i| fast_var(grid.point(i, grid.ny), p.eps)).collect();
    Ok(DiscreteScheme {
        problem: p.clone(),
        certificate: Certificate { interior_rows, min_dominance: min_dom, oblique_bound: p.g.c_obliq },
        grid,
        interior,
        top_y,
    })
}

#[inline]
fn fast_var(x: [f64; 2], eps: f64) -> [f64; 2] {
    [x[0] / eps, x[1] / eps]
}

impl DiscreteScheme {
    pub fn boundary(&self) -> &BoundaryOperator {
        &self.problem.g
    }

    /// Fast variables of the top nodes, `i = 0..=nx`.
    pub fn top_fast_vars(&self) -> &[[f64; 2]] {
        &self.top_y
    }

    /// Constant tangential and normal coefficients when the interior rows are the separable
    /// 5-point operator `-a_t D_ss - a_n D_rr`.
    pub fn separable(&self) -> Option<(f64, f64)> {
        match &self.interior {
            Interior::Constant(w) => {
                let h2 = self.grid.h * self.grid.h;
                let corners = [slot(1, 1), slot(-1, -1), slot(-1, 1), slot(1, -1)];
                corners.iter().all(|&k| w[k] == 0.0).then(|| (-w[slot(1, 0)] * h2, -w[slot(0, 1)] * h2))
            }
            _ => None,
        }
    }

    /// Pinned value of a bottom or lateral node.
    pub fn dirichlet_value(&self, i: usize, j: usize) -> f64 {
        let p = &self.problem;
        let base = p.q_dot(self.grid.point(i, j));
        match self.grid.tag(i, j) {
            NodeTag::DirichletBottom => base + p.bottom_offset,
            _ => base + p.lateral_offset,
        }
    }

    /// `q.x + bottom_offset` at every node, with the pinned lateral values.
    pub fn initial_guess(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut u = vec![0.0; g.len()];
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                u[g.idx(i, j)] = match g.tag(i, j) {
                    NodeTag::DirichletBottom | NodeTag::Lateral => self.dirichlet_value(i, j),
                    _ => self.problem.q_dot(g.point(i, j)) + self.problem.bottom_offset,
                };
            }
        }
        u
    }

    fn neighbours(&self, u: &[f64], i: usize, j: usize) -> [f64; 9] {
        let g = &self.grid;
        let mut nb = [0.0; 9];
        for (k, v) in nb.iter_mut().enumerate() {
            let (di, dj) = offset(k);
            *v = u[g.idx((i as isize + di) as usize, (j as isize + dj) as usize)];
        }
        nb
    }

    /// Value and frozen-policy stencil of the interior row at `(i, j)`.
    pub fn interior_row(&self, u: &[f64], i: usize, j: usize) -> (f64, Stencil) {
        let nb = self.neighbours(u, i, j);
        let g = &self.grid;
        match &self.interior {
            Interior::Constant(w) => (apply(w, &nb), *w),
            Interior::Variable(ws) => {
                let w = ws[(j - 1) * (g.nx - 1) + (i - 1)];
                (apply(&w, &nb), w)
            }
            Interior::Pucci { plus, lambda, big_lambda } => pucci_row(&nb, g.h, *lambda, *big_lambda, *plus),
            Interior::Isaacs => {
                let EllipticFamily::BellmanIsaacs { controls } = &self.problem.f.family else { unreachable!() };
                let y = fast_var(g.point(i, j), self.problem.eps);
                let mut best: Option<(f64, Stencil)> = None;
                for row in controls {
                    let mut inner: Option<(f64, Stencil)> = None;
                    for a in row {
                        let fa = a.eval(&y).in_frame(g.tangent, g.nu);
                        let w = monotone_stencil(&fa, g.h).expect("certified at discretization");
                        let v = apply(&w, &nb);
                        if inner.map_or(true, |(bv, _)| v > bv) {
                            inner = Some((v, w));
                        }
                    }
                    let inner = inner.expect("nonempty control row");
                    if best.map_or(true, |(bv, _)| inner.0 < bv) {
                        best = Some(inner);
                    }
                }
                best.expect("nonempty control grid")
            }
        }
    }

    /// Value and linearization of the top row at column `i`.
    pub fn top_row(&self, u: &[f64], i: usize) -> Result<TopRow> {
        let g = &self.grid;
        let j = g.ny;
        self.top_row_local(i, u[g.idx(i, j)], u[g.idx(i - 1, j)], u[g.idx(i + 1, j)], u[g.idx(i, j - 1)])
    }

    /// Top row at column `i` from the values at the node, its west and east neighbours, and
    /// the node below.
    pub fn top_row_local(&self, i: usize, c: f64, w: f64, e: f64, b: f64) -> Result<TopRow> {
        let g = &self.grid;
        let h = g.h;
        let p_n = (c - b) / h;
        let y = &self.top_y[i];
        let op = &self.problem.g;
        let eval = |p_t: f64| -> Result<(f64, f64, f64)> {
            let p = [p_t * g.tangent[0] + p_n * g.nu[0], p_t * g.tangent[1] + p_n * g.nu[1]];
            let gp = op.grad_p(p, y, g.nu)?;
            let gt = gp[0] * g.tangent[0] + gp[1] * g.tangent[1];
            let gn = gp[0] * g.nu[0] + gp[1] * g.nu[1];
            Ok((op.eval(p, y, g.nu)?, gt, gn))
        };
        let (_, gt0, _) = eval((e - w) / (2.0 * h))?;
        let forward = gt0 >= 0.0;
        let p_t = if forward { (e - c) / h } else { (c - w) / h };
        let (gv, gt, gn) = eval(p_t)?;
        let mut row = TopRow {
            value: p_n - gv,
            west: 0.0,
            center: (1.0 - gn) / h,
            east: 0.0,
            below: -(1.0 - gn) / h,
            margin: 1.0 - gn,
        };
        if forward {
            row.east = -gt / h;
            row.center += gt / h;
        } else {
            row.west = gt / h;
            row.center -= gt / h;
        }
        Ok(row)
    }

    /// Row values on the full grid; pinned rows report `u - data`.
    pub fn row_values(&self, u: &[f64]) -> Result<Vec<f64>> {
        let g = &self.grid;
        let rows: Vec<Result<Vec<f64>>> = (0..=g.ny)
            .into_par_iter()
            .map(|j| {
                (0..=g.nx)
                    .map(|i| match g.tag(i, j) {
                        NodeTag::DirichletBottom | NodeTag::Lateral => Ok(u[g.idx(i, j)] - self.dirichlet_value(i, j)),
                        NodeTag::Interior => Ok(self.interior_row(u, i, j).0),
                        NodeTag::NeumannTop => self.top_row(u, i).map(|r| r.value),
                    })
                    .collect()
            })
            .collect();
        Ok(rows.into_iter().collect::<Result<Vec<_>>>()?.concat())
    }

    /// `(max |interior row|, max |top row|)`.
    pub fn residuals(&self, u: &[f64]) -> Result<(f64, f64)> {
        let g = &self.grid;
        let vals = self.row_values(u)?;
        let (mut ri, mut rt) = (0.0f64, 0.0f64);
        for j in 1..=g.ny {
            for i in 1..g.nx {
                let v = vals[g.idx(i, j)].abs();
                if j == g.ny {
                    rt = rt.max(v);
                } else {
                    ri = ri.max(v);
                }
            }
        }
        Ok((ri, rt))
    }
}

/// Exact infimum (`plus`) or supremum of `-L_A u` over admissible policies `lambda <= A <= Lambda`,
/// where `L_A` is the monotone stencil of `A`.
fn pucci_row(nb: &[f64; 9], h: f64, lambda: f64, big_lambda: f64, plus: bool) -> (f64, Stencil) {
    let inv = 1.0 / (h * h);
    let c = nb[CENTER];
    let (e, w, n, s) = (nb[slot(1, 0)], nb[slot(-1, 0)], nb[slot(0, 1)], nb[slot(0, -1)]);
    let dss = (e - 2.0 * c + w) * inv;
    let drr = (n - 2.0 * c + s) * inv;
    let cross = 2.0 * c - e - w - n - s;
    let s_pos = (nb[slot(1, 1)] + nb[slot(-1, -1)] + cross) * inv;
    let s_neg = (nb[slot(-1, 1)] + nb[slot(1, -1)] + cross) * inv;
    let mut candidates: Vec<Sym2> = Vec::with_capacity(6);
    for (off, sign) in [(0.5 * s_pos, 1.0), (-0.5 * s_neg, -1.0)] {
        let m = Sym2::new(dss, off, drr);
        let a = if plus { pucci_plus_policy(&m, lambda, big_lambda) } else { pucci_minus_policy(&m, lambda, big_lambda) };
        if a.xy * sign >= 0.0 {
            candidates.push(a);
        }
    }
    for a11 in [lambda, big_lambda] {
        for a22 in [lambda, big_lambda] {
            candidates.push(Sym2::diag(a11, a22));
        }
    }
    let mut best: Option<(f64, Stencil)> = None;
    for a in candidates {
        let Ok(w) = monotone_stencil(&a, h) else { continue };
        let v = apply(&w, nb);
        let better = best.map_or(true, |(bv, _)| if plus { v < bv } else { v > bv });
        if better {
            best = Some((v, w));
        }
    }
    best.expect("diagonal policies are always admissible")
}
