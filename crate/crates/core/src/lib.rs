//! Numerical workbench for oscillatory oblique boundary problems posed in strips.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: rationality, periods, Dirichlet approximation, discrepancy and the rate bound.
//! * [`expr`]: the trigonometric expression schema used for periodic coefficient fields.
//! * [`operators`]: interior and boundary operator families with assumption validators.
//! * [`strip`]: the monotone finite-difference solver for the truncated strip problem.
//! * [`homogenize`]: slope extraction and the quantitative experiments built on it.
//! * [`output`]: CSV and SVG writers shared by the command line runner.

pub mod error;
pub mod expr;
pub mod homogenize;
pub mod lattice;
pub mod operators;
pub mod strip;

pub use error::{Error, Result};
