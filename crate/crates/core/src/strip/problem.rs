use super::grid::Grid;
use crate::lattice::Direction;
use crate::operators::{BoundaryOperator, EllipticOperator};
use crate::{Error, Result};

/// Truncated cell problem on the strip `-1 <= (x - tau).nu <= 0` intersected with `|s| <= R`.
///
/// Dirichlet data is `q.x + bottom_offset` on the bottom and `q.x + lateral_offset` on the
/// lateral sides; both offsets are zero for the plain cell problem.
#[derive(Debug, Clone, PartialEq)]
pub struct StripProblem {
    pub f: EllipticOperator,
    pub g: BoundaryOperator,
    pub nu: Direction,
    pub tau: [f64; 2],
    pub q: [f64; 2],
    pub eps: f64,
    pub radius: f64,
    pub h: f64,
    pub bottom_offset: f64,
    pub lateral_offset: f64,
}

/// Default lateral truncation radius.
pub const DEFAULT_RADIUS: f64 = 8.0;
/// Default residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 100_000;

impl StripProblem {
    /// Problem with `h = eps / 8`, `R = 8`, and `q = q_t * t`; checked later by [`Self::validate`].
    pub fn new(f: EllipticOperator, g: BoundaryOperator, nu: Direction, eps: f64, q_t: f64) -> Result<Self> {
        let n = nu.planar()?;
        let p = Self {
            f,
            g,
            tau: [0.0, 0.0],
            q: [q_t * n[1], -q_t * n[0]],
            eps,
            radius: DEFAULT_RADIUS,
            h: eps / 8.0,
            nu,
            bottom_offset: 0.0,
            lateral_offset: 0.0,
        };
        Ok(p)
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_tau(mut self, tau: [f64; 2]) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_g(mut self, g: BoundaryOperator) -> Self {
        self.g = g;
        self
    }

    /// Tangential slope `q = q_t * t` for the current direction.
    pub fn with_q_t(mut self, q_t: f64) -> Self {
        let n = self.nu2();
        self.q = [q_t * n[1], -q_t * n[0]];
        self
    }

    pub fn with_offsets(mut self, bottom: f64, lateral: f64) -> Self {
        self.bottom_offset = bottom;
        self.lateral_offset = lateral;
        self
    }

    pub fn nu2(&self) -> [f64; 2] {
        self.nu.planar().expect("validated planar direction")
    }

    pub fn tangent(&self) -> [f64; 2] {
        let n = self.nu2();
        [n[1], -n[0]]
    }

    pub fn q_t(&self) -> f64 {
        let t = self.tangent();
        self.q[0] * t[0] + self.q[1] * t[1]
    }

    pub fn q_dot(&self, x: [f64; 2]) -> f64 {
        self.q[0] * x[0] + self.q[1] * x[1]
    }

    /// Checks the structural requirements and the grid commensurability.
    pub fn validate(&self) -> Result<()> {
        let n = self.nu.planar()?;
        let qn = self.q[0] * n[0] + self.q[1] * n[1];
        if qn.abs() > 1e-12 * (1.0 + self.q[0].hypot(self.q[1])) {
            return Err(Error::InvalidInput(format!("q must be tangential, got q.nu = {qn:e}")));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput("eps must be positive".into()));
        }
        if self.h > self.eps / 8.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!("h = {} does not resolve eps = {} (need h <= eps/8)", self.h, self.eps)));
        }
        if self.radius < 4.0 {
            return Err(Error::InvalidInput(format!("R = {} is below the minimum truncation radius 4", self.radius)));
        }
        if self.g.c_obliq >= 1.0 {
            return Err(Error::InvalidInput("obliqueness violated: c_obliq must be below 1".into()));
        }
        self.grid().map(|_| ())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nu.planar()?, self.tau, self.radius, self.h)
    }

    /// Reference point `tau - nu/2`.
    pub fn z0(&self) -> [f64; 2] {
        let n = self.nu2();
        [self.tau[0] - 0.5 * n[0], self.tau[1] - 0.5 * n[1]]
    }
}
