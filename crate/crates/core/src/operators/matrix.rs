use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

/// Spectral decomposition `M = e_hi v_hi v_hi^T + e_lo v_lo v_lo^T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub lo: f64,
    pub hi: f64,
    /// Unit eigenvector of `hi`; the other one is its rotation by a right angle.
    pub v_hi: [f64; 2],
}

impl Sym2 {
    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    pub const fn identity() -> Self {
        Self::diag(1.0, 1.0)
    }

    /// Accepts a full matrix, rejecting asymmetry above `1e-10`.
    pub fn from_rows(m: [[f64; 2]; 2]) -> Result<Self> {
        let asym = (m[0][1] - m[1][0]).abs();
        if asym > 1e-10 {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self::new(m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]))
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn scale(&self, t: f64) -> Self {
        Self::new(t * self.xx, t * self.xy, t * self.yy)
    }

    pub fn add(&self, o: &Sym2) -> Self {
        Self::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }

    pub fn sub(&self, o: &Sym2) -> Self {
        self.add(&o.scale(-1.0))
    }

    /// Frobenius pairing `sum_ij a_ij m_ij`.
    pub fn contract(&self, o: &Sym2) -> f64 {
        self.xx * o.xx + 2.0 * self.xy * o.xy + self.yy * o.yy
    }

    pub fn eigen(&self) -> Eigen2 {
        let mean = 0.5 * (self.xx + self.yy);
        let half = 0.5 * (self.xx - self.yy);
        let r = half.hypot(self.xy);
        let (hi, lo) = (mean + r, mean - r);
        let v_hi = if r == 0.0 {
            [1.0, 0.0]
        } else if half >= 0.0 {
            let (a, b) = (half + r, self.xy);
            let n = a.hypot(b);
            [a / n, b / n]
        } else {
            let (a, b) = (self.xy, r - half);
            let n = a.hypot(b);
            [a / n, b / n]
        };
        Eigen2 { lo, hi, v_hi }
    }

    pub fn spectral_norm(&self) -> f64 {
        let e = self.eigen();
        e.lo.abs().max(e.hi.abs())
    }

    /// `a v v^T + b w w^T` with `w` the right-angle rotation of the unit vector `v`.
    pub fn from_spectrum(a: f64, b: f64, v: [f64; 2]) -> Self {
        let w = [-v[1], v[0]];
        Self::new(
            a * v[0] * v[0] + b * w[0] * w[0],
            a * v[0] * v[1] + b * w[0] * w[1],
            a * v[1] * v[1] + b * w[1] * w[1],
        )
    }

    /// `Q^T M Q` for the orthonormal frame `Q = [t | n]`.
    pub fn in_frame(&self, t: [f64; 2], n: [f64; 2]) -> Self {
        let quad = |a: [f64; 2], b: [f64; 2]| {
            a[0] * (self.xx * b[0] + self.xy * b[1]) + a[1] * (self.xy * b[0] + self.yy * b[1])
        };
        Self::new(quad(t, t), quad(t, n), quad(n, n))
    }
}

/// Upper Pucci operator `-Lambda tr(M+) + lambda tr(M-)`; the infimum of `-tr(A M)` over `lambda <= A <= Lambda`.
pub fn pucci_plus(m: &Sym2, lambda: f64, big_lambda: f64) -> f64 {
    let e = m.eigen();
    [e.lo, e.hi].iter().map(|&x| if x > 0.0 { -big_lambda * x } else { -lambda * x }).sum()
}

/// Lower Pucci operator `-lambda tr(M+) + Lambda tr(M-)`; the supremum of `-tr(A M)`.
pub fn pucci_minus(m: &Sym2, lambda: f64, big_lambda: f64) -> f64 {
    let e = m.eigen();
    [e.lo, e.hi].iter().map(|&x| if x > 0.0 { -lambda * x } else { -big_lambda * x }).sum()
}

/// Coefficient matrix attaining the upper Pucci value at `m`.
pub fn pucci_plus_policy(m: &Sym2, lambda: f64, big_lambda: f64) -> Sym2 {
    let e = m.eigen();
    let pick = |x: f64| if x > 0.0 { big_lambda } else { lambda };
    Sym2::from_spectrum(pick(e.hi), pick(e.lo), e.v_hi)
}

/// Coefficient matrix attaining the lower Pucci value at `m`.
pub fn pucci_minus_policy(m: &Sym2, lambda: f64, big_lambda: f64) -> Sym2 {
    let e = m.eigen();
    let pick = |x: f64| if x > 0.0 { lambda } else { big_lambda };
    Sym2::from_spectrum(pick(e.hi), pick(e.lo), e.v_hi)
}
