use serde::{Deserialize, Serialize};

use super::matrix::{pucci_minus, pucci_plus, Sym2};
use crate::expr::Expr;
use crate::{Error, Result};

/// Periodic symmetric coefficient field `a(y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffField {
    pub a11: Expr,
    pub a12: Expr,
    pub a22: Expr,
}

impl CoeffField {
    pub fn constant(a: Sym2) -> Self {
        Self { a11: a.xx.into(), a12: a.xy.into(), a22: a.yy.into() }
    }

    pub fn identity() -> Self {
        Self::constant(Sym2::identity())
    }

    /// `s(y) * Id`.
    pub fn isotropic(s: Expr) -> Self {
        Self { a11: s.clone(), a12: 0.0.into(), a22: s }
    }

    pub fn eval(&self, y: &[f64; 2]) -> Sym2 {
        Sym2::new(self.a11.eval(y), self.a12.eval(y), self.a22.eval(y))
    }

    pub fn as_constant(&self) -> Option<Sym2> {
        Some(Sym2::new(self.a11.as_constant()?, self.a12.as_constant()?, self.a22.as_constant()?))
    }

    /// Lipschitz bound in `y` for the operator norm of `a`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.a11.lipschitz_bound() + 2.0 * self.a12.lipschitz_bound() + self.a22.lipschitz_bound()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EllipticFamily {
    /// `F(M, y) = -sum a_ij(y) M_ij`.
    Linear { a: CoeffField },
    PucciPlus,
    PucciMinus,
    /// `inf_beta sup_alpha -tr(a^{alpha beta}(y) M)`; the outer list ranges over `beta`.
    BellmanIsaacs { controls: Vec<Vec<CoeffField>> },
}

/// Interior operator with its declared ellipticity and Lipschitz constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticOperator {
    #[serde(flatten)]
    pub family: EllipticFamily,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub lip_coeff: f64,
}

impl EllipticOperator {
    pub fn new(family: EllipticFamily, lambda: f64, big_lambda: f64, lip_coeff: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= big_lambda && big_lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ellipticity constants must satisfy 0 < lambda <= Lambda, got ({lambda}, {big_lambda})"
            )));
        }
        if !(lip_coeff >= 0.0) {
            return Err(Error::InvalidInput("lip_coeff must be nonnegative".into()));
        }
        if let EllipticFamily::BellmanIsaacs { controls } = &family {
            if controls.is_empty() || controls.iter().any(|c| c.is_empty()) {
                return Err(Error::InvalidInput("Bellman-Isaacs needs a nonempty control grid".into()));
            }
        }
        Ok(Self { family, lambda, big_lambda, lip_coeff })
    }

    /// `-Delta`.
    pub fn laplacian() -> Self {
        Self::new(EllipticFamily::Linear { a: CoeffField::identity() }, 1.0, 1.0, 2.0).expect("valid constants")
    }

    /// Linear operator whose constants are read off the closed-form coefficients.
    pub fn linear(a: CoeffField) -> Result<Self> {
        let (lambda, big_lambda) = sampled_spectrum(&a);
        let lip = 2.0 * a.lipschitz_bound().max(big_lambda);
        Self::new(EllipticFamily::Linear { a }, lambda, big_lambda, lip)
    }

    pub fn pucci_plus(lambda: f64, big_lambda: f64) -> Result<Self> {
        Self::new(EllipticFamily::PucciPlus, lambda, big_lambda, 2.0 * big_lambda)
    }

    pub fn pucci_minus(lambda: f64, big_lambda: f64) -> Result<Self> {
        Self::new(EllipticFamily::PucciMinus, lambda, big_lambda, 2.0 * big_lambda)
    }

    pub fn bellman_isaacs(controls: Vec<Vec<CoeffField>>) -> Result<Self> {
        let (mut lo, mut hi, mut lip) = (f64::INFINITY, 0.0f64, 0.0f64);
        for a in controls.iter().flatten() {
            let (l, h) = sampled_spectrum(a);
            lo = lo.min(l);
            hi = hi.max(h);
            lip = lip.max(a.lipschitz_bound());
        }
        Self::new(EllipticFamily::BellmanIsaacs { controls }, lo, hi, 2.0 * lip.max(hi))
    }

    /// Constant coefficient matrix when the operator is linear with constant coefficients.
    pub fn constant_linear(&self) -> Option<Sym2> {
        match &self.family {
            EllipticFamily::Linear { a } => a.as_constant(),
            _ => None,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.family, EllipticFamily::Linear { .. })
    }
}

/// Smallest and largest eigenvalue of a coefficient field over a dense torus sample.
pub fn sampled_spectrum(a: &CoeffField) -> (f64, f64) {
    if let Some(c) = a.as_constant() {
        let e = c.eigen();
        return (e.lo, e.hi);
    }
    crate::expr::torus_grid(64).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
        let e = a.eval(&y).eigen();
        (lo.min(e.lo), hi.max(e.hi))
    })
}

/// Evaluates `F(M, y)`.
pub fn eval_f(op: &EllipticOperator, m: &Sym2, y: &[f64; 2]) -> f64 {
    match &op.family {
        EllipticFamily::Linear { a } => -a.eval(y).contract(m),
        EllipticFamily::PucciPlus => pucci_plus(m, op.lambda, op.big_lambda),
        EllipticFamily::PucciMinus => pucci_minus(m, op.lambda, op.big_lambda),
        EllipticFamily::BellmanIsaacs { controls } => controls
            .iter()
            .map(|row| row.iter().map(|a| -a.eval(y).contract(m)).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min),
    }
}

/// [`eval_f`] for a possibly asymmetric input matrix.
pub fn eval_f_rows(op: &EllipticOperator, m: [[f64; 2]; 2], y: &[f64; 2]) -> Result<f64> {
    Ok(eval_f(op, &Sym2::from_rows(m)?, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_contraction() {
        let op = EllipticOperator::laplacian();
        assert_eq!(eval_f(&op, &Sym2::diag(2.0, 3.0), &[0.2, 0.4]), -5.0);
    }

    #[test]
    fn single_control_is_linear() {
        let a = CoeffField::isotropic(Expr::constant(2.0).plus(Expr::sin(1.0, 0, 1)));
        let bi = EllipticOperator::bellman_isaacs(vec![vec![a.clone()]]).unwrap();
        let lin = EllipticOperator::linear(a).unwrap();
        let m = Sym2::new(0.4, -0.3, 1.1);
        for y in crate::expr::torus_grid(5) {
            assert_eq!(eval_f(&bi, &m, &y), eval_f(&lin, &m, &y));
        }
    }

    #[test]
    fn oscillating_isotropic_spectrum() {
        let a = CoeffField::isotropic(Expr::constant(2.0).plus(Expr::sin(1.0, 0, 1)));
        let op = EllipticOperator::linear(a).unwrap();
        assert!((op.lambda - 1.0).abs() < 1e-12 && (op.big_lambda - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(EllipticOperator::pucci_plus(2.0, 1.0).is_err());
        assert!(EllipticOperator::pucci_plus(0.0, 1.0).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let op = EllipticOperator::pucci_minus(1.0, 2.0).unwrap();
        let s = serde_json::to_string(&op).unwrap();
        assert!(s.contains("\"family\":\"pucci_minus\""));
        let back: EllipticOperator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, op);
    }
}
