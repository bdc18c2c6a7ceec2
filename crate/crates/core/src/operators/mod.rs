//! Interior operators `F(M, y)` and oblique boundary operators `G(p, y)`.
//!
//! All coefficient fields are closed-form [`Expr`](crate::expr::Expr)s, so periodicity is exact.
//! The `validate_*` functions sample the structural inequalities and report slack rather than
//! failing fast.

mod boundary;
mod elliptic;
mod matrix;
mod validate;

pub use boundary::{project_g_k, BoundaryFamily, BoundaryOperator};
pub use elliptic::{eval_f, eval_f_rows, sampled_spectrum, CoeffField, EllipticFamily, EllipticOperator};
pub use matrix::{pucci_minus, pucci_minus_policy, pucci_plus, pucci_plus_policy, Eigen2, Sym2};
pub use validate::{validate_f, validate_g, CheckOutcome, ValidationReport, FD_REL_TOL, FD_STEP};

/// Evaluates `G(p, y)` against the boundary normal `nu`.
pub fn eval_g(op: &BoundaryOperator, p: [f64; 2], y: &[f64; 2], nu: [f64; 2]) -> crate::Result<f64> {
    op.eval(p, y, nu)
}
