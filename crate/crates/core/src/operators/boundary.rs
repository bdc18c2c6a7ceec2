use serde::{Deserialize, Serialize};

use crate::expr::{torus_grid, Expr};
use crate::{Error, Result};

const SAMPLE_SIDE: usize = 128;
const SAMPLE_MARGIN: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BoundaryFamily {
    Constant { g: f64 },
    /// `G(p, y) = (gamma(y).nu)^-1 (gamma(y).p_T + g(y))` with `p_T` the tangential part of `p`.
    LinearOblique { gamma: [Expr; 2], g: Expr },
    /// `G(p, y) = theta(y) sqrt(1 + |p|^2)`.
    Capillarity { theta: Expr },
}

/// Oblique boundary operator with declared growth, Lipschitz and obliqueness constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryOperator {
    #[serde(flatten)]
    pub family: BoundaryFamily,
    pub mu0: f64,
    pub m_lip: f64,
    pub c_obliq: f64,
    /// Constant added to every evaluation.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub shift: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl BoundaryOperator {
    pub fn new(family: BoundaryFamily, mu0: f64, m_lip: f64, c_obliq: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&c_obliq) {
            return Err(Error::InvalidInput(format!(
                "obliqueness violated: the bound c_obliq = {c_obliq} must lie in [0, 1)"
            )));
        }
        if !(mu0 >= 0.0 && m_lip >= 0.0) {
            return Err(Error::InvalidInput("growth and Lipschitz constants must be nonnegative".into()));
        }
        if let BoundaryFamily::Capillarity { theta } = &family {
            let sup = theta_sup(theta);
            if sup >= 1.0 {
                return Err(Error::InvalidInput(format!(
                    "obliqueness violated: sup |theta| = {sup} must be below 1"
                )));
            }
            if sup > c_obliq + 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "obliqueness violated: sup |theta| = {sup} exceeds the declared c_obliq = {c_obliq}"
                )));
            }
        }
        Ok(Self { family, mu0, m_lip, c_obliq, shift: 0.0 })
    }

    pub fn constant(g: f64) -> Self {
        Self { family: BoundaryFamily::Constant { g }, mu0: g.abs(), m_lip: 0.0, c_obliq: 0.0, shift: 0.0 }
    }

    /// Capillarity operator with constants derived from the closed form of `theta`.
    pub fn capillarity(theta: Expr) -> Result<Self> {
        let sup = theta_sup(&theta);
        if sup >= 1.0 {
            return Err(Error::InvalidInput(format!("obliqueness violated: sup |theta| = {sup} must be below 1")));
        }
        let m = sup.max(theta.lipschitz_bound());
        Self::new(BoundaryFamily::Capillarity { theta }, sup, m, sup)
    }

    /// Linear oblique operator with constants derived by sampling against the direction `nu`.
    pub fn linear_oblique(gamma: [Expr; 2], g: Expr, nu: [f64; 2]) -> Result<Self> {
        let t = [nu[1], -nu[0]];
        let (mut mu0, mut m) = (0.0f64, 0.0f64);
        for y in torus_grid(SAMPLE_SIDE) {
            let gv = [gamma[0].eval(&y), gamma[1].eval(&y)];
            let c = gv[0] * nu[0] + gv[1] * nu[1];
            if c <= 0.0 {
                return Err(Error::DegenerateOblicity(c));
            }
            let a = gv[0] * t[0] + gv[1] * t[1];
            let gy = g.eval(&y);
            let (g0, g1) = (gamma[0].grad(&y), gamma[1].grad(&y));
            let grad_a = [t[0] * g0[0] + t[1] * g1[0], t[0] * g0[1] + t[1] * g1[1]];
            let grad_c = [nu[0] * g0[0] + nu[1] * g1[0], nu[0] * g0[1] + nu[1] * g1[1]];
            let grad_g = g.grad(&y);
            let quot = |num: f64, dn: [f64; 2]| {
                let v = [(dn[0] * c - num * grad_c[0]) / (c * c), (dn[1] * c - num * grad_c[1]) / (c * c)];
                v[0].hypot(v[1])
            };
            mu0 = mu0.max((a / c).abs()).max((gy / c).abs());
            m = m.max((a / c).abs()).max(quot(a, grad_a)).max(quot(gy, grad_g));
        }
        Self::new(BoundaryFamily::LinearOblique { gamma, g }, SAMPLE_MARGIN * mu0, SAMPLE_MARGIN * m, 0.0)
    }

    /// The same operator plus a constant.
    pub fn shifted(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.shift += s;
        out.mu0 += s.abs();
        out
    }

    pub fn eval(&self, p: [f64; 2], y: &[f64; 2], nu: [f64; 2]) -> Result<f64> {
        let base = match &self.family {
            BoundaryFamily::Constant { g } => *g,
            BoundaryFamily::Capillarity { theta } => theta.eval(y) * (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt(),
            BoundaryFamily::LinearOblique { gamma, g } => {
                let gv = [gamma[0].eval(y), gamma[1].eval(y)];
                let c = gv[0] * nu[0] + gv[1] * nu[1];
                if c <= 0.0 {
                    return Err(Error::DegenerateOblicity(c));
                }
                let pn = p[0] * nu[0] + p[1] * nu[1];
                let pt = [p[0] - pn * nu[0], p[1] - pn * nu[1]];
                (gv[0] * pt[0] + gv[1] * pt[1] + g.eval(y)) / c
            }
        };
        Ok(base + self.shift)
    }

    /// Analytic gradient in `p`.
    pub fn grad_p(&self, p: [f64; 2], y: &[f64; 2], nu: [f64; 2]) -> Result<[f64; 2]> {
        Ok(match &self.family {
            BoundaryFamily::Constant { .. } => [0.0, 0.0],
            BoundaryFamily::Capillarity { theta } => {
                let s = theta.eval(y) / (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt();
                [s * p[0], s * p[1]]
            }
            BoundaryFamily::LinearOblique { gamma, .. } => {
                let gv = [gamma[0].eval(y), gamma[1].eval(y)];
                let c = gv[0] * nu[0] + gv[1] * nu[1];
                if c <= 0.0 {
                    return Err(Error::DegenerateOblicity(c));
                }
                [(gv[0] - c * nu[0]) / c, (gv[1] - c * nu[1]) / c]
            }
        })
    }

    pub fn depends_on_y(&self) -> bool {
        match &self.family {
            BoundaryFamily::Constant { .. } => false,
            BoundaryFamily::Capillarity { theta } => theta.as_constant().is_none(),
            BoundaryFamily::LinearOblique { gamma, g } => {
                gamma.iter().chain(std::iter::once(g)).any(|e| e.as_constant().is_none())
            }
        }
    }

    fn map_fields(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        let family = match &self.family {
            BoundaryFamily::Constant { g } => BoundaryFamily::Constant { g: *g },
            BoundaryFamily::Capillarity { theta } => BoundaryFamily::Capillarity { theta: f(theta) },
            BoundaryFamily::LinearOblique { gamma, g } => {
                BoundaryFamily::LinearOblique { gamma: [f(&gamma[0]), f(&gamma[1])], g: f(g) }
            }
        };
        Self { family, ..self.clone() }
    }
}

fn theta_sup(theta: &Expr) -> f64 {
    let bound = theta.sup_bound();
    let (lo, hi) = theta.sample_extremes(SAMPLE_SIDE);
    let sampled = lo.abs().max(hi.abs());
    if theta.as_constant().is_some() {
        return sampled;
    }
    let mesh = std::f64::consts::SQRT_2 / SAMPLE_SIDE as f64;
    bound.min(sampled + 0.5 * theta.lipschitz_bound() * mesh)
}

/// Freezes the second fast variable at `delta (k - 1)`, with `k` taken modulo `1/delta`.
pub fn project_g_k(op: &BoundaryOperator, delta: f64, k: i64) -> Result<BoundaryOperator> {
    let m = (1.0 / delta).round();
    if !(delta > 0.0) || m < 1.0 || (m * delta - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("delta must be 1/m for an integer m, got {delta}")));
    }
    let m = m as i64;
    let slot = (k - 1).rem_euclid(m);
    let y2 = slot as f64 / m as f64;
    Ok(op.map_fields(|e| e.freeze(1, y2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const E2: [f64; 2] = [0.0, 1.0];

    #[test]
    fn constant_and_capillarity_values() {
        assert_eq!(BoundaryOperator::constant(0.3).eval([5.0, -1.0], &[0.1, 0.2], E2).unwrap(), 0.3);
        let cap = BoundaryOperator::capillarity(0.5.into()).unwrap();
        assert_eq!(cap.eval([0.0, 0.0], &[0.3, 0.9], E2).unwrap(), 0.5);
        assert_eq!((cap.mu0, cap.m_lip, cap.c_obliq), (0.5, 0.5, 0.5));
    }

    #[test]
    fn oblique_normal_gamma_ignores_tangential_slope() {
        let op = BoundaryOperator::linear_oblique([0.0.into(), 1.0.into()], 0.0.into(), E2).unwrap();
        for pt in [-2.0, 0.0, 3.5] {
            assert_eq!(op.eval([pt, 0.0], &[0.4, 0.1], E2).unwrap(), 0.0);
        }
    }

    #[test]
    fn capillarity_above_one_is_rejected() {
        let err = BoundaryOperator::capillarity(1.2.into()).unwrap_err();
        assert!(err.to_string().contains("obliqueness"));
    }

    #[test]
    fn degenerate_gamma_is_reported() {
        let err = BoundaryOperator::linear_oblique([1.0.into(), 0.0.into()], 0.0.into(), E2).unwrap_err();
        assert!(matches!(err, Error::DegenerateOblicity(_)));
    }

    #[test]
    fn projection_freezes_second_variable() {
        let theta = Expr::constant(0.4).plus(Expr::sin(0.1, 1, 1));
        let op = BoundaryOperator::capillarity(theta).unwrap();
        let g3 = project_g_k(&op, 0.25, 3).unwrap();
        let v = g3.eval([0.0, 0.0], &[0.37, 0.81], E2).unwrap();
        assert!((v - 0.4).abs() < 1e-15);
        let g1 = project_g_k(&op, 0.25, 1).unwrap();
        assert_eq!(g1.eval([0.0, 0.0], &[0.2, 0.7], E2).unwrap(), 0.4);
        assert_eq!(project_g_k(&op, 0.25, 3).unwrap(), project_g_k(&op, 0.25, 7).unwrap());
        assert_eq!(project_g_k(&op, 0.25, 0).unwrap(), project_g_k(&op, 0.25, 4).unwrap());
    }

    #[test]
    fn projection_rejects_non_reciprocal_delta() {
        assert!(project_g_k(&BoundaryOperator::constant(0.1), 0.3, 1).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let op = BoundaryOperator::capillarity(Expr::constant(0.4).plus(Expr::cos(0.2, 1, 1))).unwrap();
        let s = serde_json::to_string(&op).unwrap();
        let back: BoundaryOperator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, op);
    }
}
