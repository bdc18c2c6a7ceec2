//! Fast solver for the separable operator `-a_t D_ss - a_n D_rr` on the free nodes.
//!
//! A sine transform diagonalizes the tangential second difference (Dirichlet at both lateral
//! sides), leaving one tridiagonal system per mode in the normal index.

use std::sync::Arc;

use rayon::prelude::*;
use rustdct::DctPlanner;

type Dst = Arc<dyn rustdct::Dst1<f64>>;

/// Last row of each per-mode system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopRow {
    /// `beta (u_top - u_below) / h = f`.
    Neumann { beta: f64 },
    /// `u_top = f`.
    Dirichlet,
}

/// Separable constant-coefficient operator on a grid with `nx - 1` free columns and `ny` free rows.
pub struct SpectralSolver {
    pub a_t: f64,
    pub a_n: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    dst: Dst,
    sigma: Vec<f64>,
}

impl std::fmt::Debug for SpectralSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralSolver").field("a_t", &self.a_t).field("a_n", &self.a_n).field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

impl SpectralSolver {
    pub fn new(a_t: f64, a_n: f64, h: f64, nx: usize, ny: usize) -> Self {
        assert!(nx >= 2 && ny >= 1, "grid too small for the spectral solver");
        let m = nx - 1;
        let dst = DctPlanner::new().plan_dst1(m);
        let sigma = (1..=m)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * nx as f64)).sin();
                4.0 * s * s / (h * h)
            })
            .collect();
        Self { a_t, a_n, h, nx, ny, dst, sigma }
    }

    pub fn modes(&self) -> usize {
        self.nx - 1
    }

    /// Eigenvalues of `-D_ss` for the sine modes.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// In-place forward sine transform of one row.
    pub fn forward(&self, row: &mut [f64]) {
        self.dst.process_dst1(row);
    }

    /// In-place inverse sine transform of one row.
    pub fn inverse(&self, row: &mut [f64]) {
        self.dst.process_dst1(row);
        let scale = 2.0 / self.nx as f64;
        row.iter_mut().for_each(|v| *v *= scale);
    }

    /// Decay rate `kappa_k` with `cosh kappa = 1 + a_t sigma h^2 / (2 a_n)`.
    fn kappa(&self, sigma: f64) -> f64 {
        let x = self.a_t * sigma * self.h * self.h / (2.0 * self.a_n);
        (x + (x * (2.0 + x)).sqrt()).ln_1p()
    }

    /// Ratios `u_{ny-1} / u_{ny}` of the discrete harmonic modes vanishing on the bottom.
    pub fn transfer_ratios(&self) -> Vec<f64> {
        let ny = self.ny as f64;
        self.sigma
            .iter()
            .map(|&s| {
                let k = self.kappa(s);
                (-k).exp() * (-2.0 * k * (ny - 1.0)).exp_m1() / (-2.0 * k * ny).exp_m1()
            })
            .collect()
    }

    /// Solves the separable system in place; `rhs` holds rows `j = 1..=ny`, each of length `nx - 1`.
    pub fn solve(&self, rhs: &mut [f64], top: TopRow) {
        let m = self.modes();
        let ny = self.ny;
        assert_eq!(rhs.len(), m * ny);
        rhs.par_chunks_mut(m).for_each(|row| self.forward(row));
        let mut modes = vec![0.0; m * ny];
        transpose(rhs, &mut modes, ny, m);
        let off = -self.a_n / (self.h * self.h);
        modes.par_chunks_mut(ny).enumerate().for_each_init(
            || vec![0.0; ny],
            |scratch, (k, col)| {
                let diag = 2.0 * self.a_n / (self.h * self.h) + self.a_t * self.sigma[k];
                let (last_lower, last_diag) = match top {
                    TopRow::Neumann { beta } => (-beta / self.h, beta / self.h),
                    TopRow::Dirichlet => (0.0, 1.0),
                };
                thomas(col, scratch, off, diag, last_lower, last_diag);
            },
        );
        transpose(&modes, rhs, m, ny);
        rhs.par_chunks_mut(m).for_each(|row| self.inverse(row));
    }
}

/// `dst[c * rows + r] = src[r * cols + c]`.
fn transpose(src: &[f64], dst: &mut [f64], rows: usize, cols: usize) {
    const B: usize = 32;
    dst.par_chunks_mut(rows * B.min(cols).max(1)).enumerate().for_each(|(blk, out)| {
        let c0 = blk * B.min(cols).max(1);
        let width = out.len() / rows;
        for r0 in (0..rows).step_by(B) {
            for c in 0..width {
                for r in r0..(r0 + B).min(rows) {
                    out[c * rows + r] = src[r * cols + c0 + c];
                }
            }
        }
    });
}

/// Tridiagonal solve with constant interior coefficients `(off, diag, off)`, no lower entry in
/// the first row, and last row `(last_lower, last_diag)`.
fn thomas(x: &mut [f64], cp: &mut [f64], off: f64, diag: f64, last_lower: f64, last_diag: f64) {
    let n = x.len();
    if n == 1 {
        x[0] /= last_diag;
        return;
    }
    cp[0] = off / diag;
    x[0] /= diag;
    for j in 1..n {
        let (lower, d, upper) = if j + 1 == n { (last_lower, last_diag, 0.0) } else { (off, diag, off) };
        let denom = d - lower * cp[j - 1];
        cp[j] = upper / denom;
        x[j] = (x[j] - lower * x[j - 1]) / denom;
    }
    for j in (0..n - 1).rev() {
        x[j] -= cp[j] * x[j + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(s: &SpectralSolver, u: &[f64], top: TopRow) -> Vec<f64> {
        let (m, ny, h) = (s.modes(), s.ny, s.h);
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || i >= m as isize || j < 0 {
                0.0
            } else {
                u[j as usize * m + i as usize]
            }
        };
        let mut out = vec![0.0; m * ny];
        for j in 0..ny as isize {
            for i in 0..m as isize {
                let c = at(i, j);
                out[j as usize * m + i as usize] = if j as usize + 1 == ny {
                    match top {
                        TopRow::Neumann { beta } => beta * (c - at(i, j - 1)) / h,
                        TopRow::Dirichlet => c,
                    }
                } else {
                    -s.a_t * (at(i + 1, j) - 2.0 * c + at(i - 1, j)) / (h * h)
                        - s.a_n * (at(i, j + 1) - 2.0 * c + at(i, j - 1)) / (h * h)
                };
            }
        }
        out
    }

    #[test]
    fn inverts_the_separable_operator() {
        let s = SpectralSolver::new(1.3, 0.7, 0.1, 17, 9);
        let u: Vec<f64> = (0..16 * 9).map(|k| ((k * 37 % 11) as f64 - 5.0) / 3.0).collect();
        for top in [TopRow::Neumann { beta: 0.8 }, TopRow::Dirichlet] {
            let mut f = apply(&s, &u, top);
            s.solve(&mut f, top);
            let err = u.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-11, "{top:?}: {err}");
        }
    }

    #[test]
    fn transfer_ratio_matches_dirichlet_solve() {
        let s = SpectralSolver::new(1.0, 1.0, 0.05, 40, 20);
        let m = s.modes();
        let mut top = vec![0.0; m];
        top[3] = 1.0;
        let mut spec = top.clone();
        s.forward(&mut spec);
        let rho = s.transfer_ratios();
        spec.iter_mut().zip(&rho).for_each(|(v, r)| *v *= r);
        s.inverse(&mut spec);
        let mut rhs = vec![0.0; m * s.ny];
        rhs[(s.ny - 1) * m..].copy_from_slice(&top);
        s.solve(&mut rhs, TopRow::Dirichlet);
        let below = &rhs[(s.ny - 2) * m..(s.ny - 1) * m];
        let err = below.iter().zip(&spec).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
    }
}
