//! Closed-form periodic fields on the unit torus.
//!
//! An [`Expr`] is a finite sum of terms `c * prod_j trig_j(2 pi k_j y_{a_j})` with integer
//! frequencies `k_j`, so every field is exactly 1-periodic in each coordinate. In JSON a field
//! is either a bare number or `{"terms": [{"coeff": c, "factors": [{"func": "sin", "axis": 0, "freq": 1}]}]}`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub func: Trig,
    pub axis: usize,
    pub freq: i32,
}

impl Factor {
    fn phase(&self, y: &[f64; 2]) -> f64 {
        TAU * self.freq as f64 * y[self.axis]
    }

    fn eval(&self, y: &[f64; 2]) -> f64 {
        match self.func {
            Trig::Sin => self.phase(y).sin(),
            Trig::Cos => self.phase(y).cos(),
        }
    }

    fn deriv(&self, y: &[f64; 2]) -> f64 {
        let w = TAU * self.freq as f64;
        match self.func {
            Trig::Sin => w * self.phase(y).cos(),
            Trig::Cos => -w * self.phase(y).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    #[serde(default)]
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ExprRepr", into = "ExprRepr")]
pub struct Expr {
    pub terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExprRepr {
    Constant(f64),
    Terms { terms: Vec<Term> },
}

impl From<ExprRepr> for Expr {
    fn from(r: ExprRepr) -> Self {
        match r {
            ExprRepr::Constant(c) => Expr::constant(c),
            ExprRepr::Terms { terms } => Expr { terms },
        }
    }
}

impl From<Expr> for ExprRepr {
    fn from(e: Expr) -> Self {
        match e.as_constant() {
            Some(c) => ExprRepr::Constant(c),
            None => ExprRepr::Terms { terms: e.terms },
        }
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr { terms: vec![Term { coeff: c, factors: vec![] }] }
    }

    /// `c * trig(2 pi freq y_axis)`.
    pub fn trig(c: f64, func: Trig, axis: usize, freq: i32) -> Self {
        Expr { terms: vec![Term { coeff: c, factors: vec![Factor { func, axis, freq }] }] }
    }

    pub fn sin(c: f64, axis: usize, freq: i32) -> Self {
        Self::trig(c, Trig::Sin, axis, freq)
    }

    pub fn cos(c: f64, axis: usize, freq: i32) -> Self {
        Self::trig(c, Trig::Cos, axis, freq)
    }

    pub fn plus(mut self, other: Expr) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.coeff *= s;
        }
        self
    }

    pub fn eval(&self, y: &[f64; 2]) -> f64 {
        self.terms.iter().map(|t| t.coeff * t.factors.iter().map(|f| f.eval(y)).product::<f64>()).sum()
    }

    /// Analytic gradient in `y`.
    pub fn grad(&self, y: &[f64; 2]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for t in &self.terms {
            for (i, fi) in t.factors.iter().enumerate() {
                let rest: f64 = t.factors.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, f)| f.eval(y)).product();
                g[fi.axis] += t.coeff * fi.deriv(y) * rest;
            }
        }
        g
    }

    /// `Some(c)` when the field does not depend on `y`.
    pub fn as_constant(&self) -> Option<f64> {
        let mut c = 0.0;
        for t in &self.terms {
            if t.factors.iter().any(|f| f.freq != 0) {
                return None;
            }
            c += t.coeff * t.factors.iter().map(|f| if f.func == Trig::Cos { 1.0 } else { 0.0 }).product::<f64>();
        }
        Some(c)
    }

    /// Upper bound on `sup |e|`.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    /// Upper bound on the Lipschitz constant in `y` (Euclidean).
    pub fn lipschitz_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff.abs() * TAU * t.factors.iter().map(|f| (f.freq as f64).abs()).sum::<f64>())
            .sum()
    }

    pub fn depends_on(&self, axis: usize) -> bool {
        self.terms.iter().any(|t| t.coeff != 0.0 && t.factors.iter().any(|f| f.axis == axis && f.freq != 0))
    }

    /// Substitutes `y_axis = value`, folding the affected factors into the coefficients.
    pub fn freeze(&self, axis: usize, value: f64) -> Expr {
        let mut y = [0.0; 2];
        y[axis] = value;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let (fixed, free): (Vec<Factor>, Vec<Factor>) = t.factors.iter().partition(|f| f.axis == axis);
                let coeff = t.coeff * fixed.iter().map(|f| f.eval(&y)).product::<f64>();
                Term { coeff, factors: free }
            })
            .collect();
        Expr { terms }
    }

    /// Rejects factors that reference an axis outside the plane.
    pub fn check_axes(&self) -> crate::Result<()> {
        match self.terms.iter().flat_map(|t| &t.factors).find(|f| f.axis > 1) {
            Some(f) => Err(crate::Error::InvalidInput(format!("expression uses axis {} but only 0 and 1 exist", f.axis))),
            None => Ok(()),
        }
    }

    /// Dense sampling of `y` on an `n x n` grid of the torus.
    pub fn sample_extremes(&self, n: usize) -> (f64, f64) {
        torus_grid(n).map(|y| self.eval(&y)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

/// Points `(i/n, j/n)` of the torus, row-major.
pub fn torus_grid(n: usize) -> impl Iterator<Item = [f64; 2]> {
    (0..n * n).map(move |k| [(k % n) as f64 / n as f64, (k / n) as f64 / n as f64])
}
