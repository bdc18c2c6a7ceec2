use crate::{Error, Result};

/// Role of a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeTag {
    Interior,
    DirichletBottom,
    NeumannTop,
    Lateral,
}

impl NodeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeTag::Interior => "interior",
            NodeTag::DirichletBottom => "dirichlet_bottom",
            NodeTag::NeumannTop => "neumann_top",
            NodeTag::Lateral => "lateral",
        }
    }
}

/// Rotated lattice covering `[-R, R] x [-1, 0]` in (tangent, normal) coordinates.
///
/// Node `(i, j)` sits at `tau + s_i t + r_j nu` with `s_i = -R + i h`, `r_j = -1 + j h` and
/// `t = (nu_2, -nu_1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nu: [f64; 2],
    pub tangent: [f64; 2],
    pub tau: [f64; 2],
    pub radius: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

fn integer_ratio(len: f64, h: f64, what: &str) -> Result<usize> {
    let n = (len / h).round();
    if n < 2.0 || (n * h - len).abs() > 1e-9 * len.max(1.0) {
        return Err(Error::InvalidInput(format!("{what} = {len} is not an integer multiple (>= 2) of h = {h}")));
    }
    Ok(n as usize)
}

impl Grid {
    pub fn new(nu: [f64; 2], tau: [f64; 2], radius: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && radius > 0.0) {
            return Err(Error::InvalidInput("grid needs h > 0 and R > 0".into()));
        }
        let nx = integer_ratio(2.0 * radius, h, "2R")?;
        let ny = integer_ratio(1.0, h, "strip width")?;
        Ok(Self { nu, tangent: [nu[1], -nu[0]], tau, radius, h, nx, ny })
    }

    pub fn len(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        -self.radius + i as f64 * self.h
    }

    #[inline]
    pub fn r(&self, j: usize) -> f64 {
        -1.0 + j as f64 * self.h
    }

    /// Ambient coordinates of the frame point `(s, r)`.
    #[inline]
    pub fn at(&self, s: f64, r: f64) -> [f64; 2] {
        [
            self.tau[0] + s * self.tangent[0] + r * self.nu[0],
            self.tau[1] + s * self.tangent[1] + r * self.nu[1],
        ]
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        self.at(self.s(i), self.r(j))
    }

    /// Frame coordinates `((x - tau).t, (x - tau).nu)`.
    pub fn frame(&self, x: [f64; 2]) -> (f64, f64) {
        let d = [x[0] - self.tau[0], x[1] - self.tau[1]];
        (d[0] * self.tangent[0] + d[1] * self.tangent[1], d[0] * self.nu[0] + d[1] * self.nu[1])
    }

    pub fn tag(&self, i: usize, j: usize) -> NodeTag {
        if j == 0 {
            NodeTag::DirichletBottom
        } else if i == 0 || i == self.nx {
            NodeTag::Lateral
        } else if j == self.ny {
            NodeTag::NeumannTop
        } else {
            NodeTag::Interior
        }
    }

    /// Number of free (interior and top) nodes.
    pub fn free_len(&self) -> usize {
        (self.nx - 1) * self.ny
    }

    /// Free-node index of `(i, j)`, rows `j = 1..=ny` with `nx - 1` entries each.
    #[inline]
    pub fn free_idx(&self, i: usize, j: usize) -> usize {
        (j - 1) * (self.nx - 1) + (i - 1)
    }

    /// Row index nearest to the frame depth `r`, if it lies on a grid row.
    pub fn row_at(&self, r: f64) -> Option<usize> {
        let fj = (r + 1.0) / self.h;
        let j = fj.round();
        ((fj - j).abs() < 1e-9 && j >= 0.0 && j <= self.ny as f64).then_some(j as usize)
    }
}

/// Node values on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count must match the grid");
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                values[grid.idx(i, j)] = f(grid.point(i, j));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// Bilinear interpolation in frame coordinates.
    pub fn interpolate_frame(&self, s: f64, r: f64) -> Result<f64> {
        let g = &self.grid;
        let fi = (s + g.radius) / g.h;
        let fj = (r + 1.0) / g.h;
        let slack = 1e-9;
        if !(fi >= -slack && fi <= g.nx as f64 + slack && fj >= -slack && fj <= g.ny as f64 + slack) {
            return Err(Error::OutOfGrid);
        }
        let i0 = (fi.floor().max(0.0) as usize).min(g.nx - 1);
        let j0 = (fj.floor().max(0.0) as usize).min(g.ny - 1);
        let (a, b) = ((fi - i0 as f64).clamp(0.0, 1.0), (fj - j0 as f64).clamp(0.0, 1.0));
        Ok((1.0 - a) * (1.0 - b) * self.at(i0, j0)
            + a * (1.0 - b) * self.at(i0 + 1, j0)
            + (1.0 - a) * b * self.at(i0, j0 + 1)
            + a * b * self.at(i0 + 1, j0 + 1))
    }

    /// Bilinear interpolation at an ambient point.
    pub fn interpolate(&self, x: [f64; 2]) -> Result<f64> {
        let (s, r) = self.grid.frame(x);
        self.interpolate_frame(s, r)
    }

    /// Maximum of `|self - other|` over nodes with `|x - tau| <= radius`.
    pub fn max_abs_diff_in_ball(&self, other: &GridField, radius: f64) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0f64;
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                if g.s(i).hypot(g.r(j)) <= radius + 1e-12 {
                    worst = worst.max((self.at(i, j) - other.at(i, j)).abs());
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_partition_the_grid() {
        let g = Grid::new([0.0, 1.0], [0.0, 0.0], 1.0, 0.25).unwrap();
        assert_eq!((g.nx, g.ny), (8, 4));
        assert_eq!(g.tag(0, 0), NodeTag::DirichletBottom);
        assert_eq!(g.tag(0, 4), NodeTag::Lateral);
        assert_eq!(g.tag(3, 4), NodeTag::NeumannTop);
        assert_eq!(g.tag(3, 2), NodeTag::Interior);
        assert_eq!(g.point(0, 0), [-1.0, -1.0]);
    }

    #[test]
    fn rejects_incommensurate_spacing() {
        assert!(Grid::new([0.0, 1.0], [0.0, 0.0], 1.0, 0.3).is_err());
    }

    #[test]
    fn bilinear_is_exact_on_affine_fields() {
        let nu = [0.6, 0.8];
        let g = Grid::new(nu, [0.2, -0.1], 2.0, 0.125).unwrap();
        let f = GridField::from_fn(g, |x| 1.0 + 2.0 * x[0] - 0.5 * x[1]);
        let x = f.grid.at(0.3, -0.41);
        let want = 1.0 + 2.0 * x[0] - 0.5 * x[1];
        assert!((f.interpolate(x).unwrap() - want).abs() < 1e-13);
        assert_eq!(f.interpolate_frame(2.5, -0.5), Err(Error::OutOfGrid));
    }
}
