//! Monotone finite-difference solver for the truncated strip problem.

mod checks;
mod grid;
mod problem;
pub mod krylov;
mod scheme;
mod solve;
pub mod spectral;

pub use grid::{Grid, GridField, NodeTag};
pub use problem::{StripProblem, DEFAULT_MAX_ITER, DEFAULT_RADIUS, DEFAULT_TOL};
pub use scheme::{discretize, monotone_stencil, Certificate, DiscreteScheme, Stencil, TopRow, MAX_PUCCI_RATIO};
pub use solve::{barrier_constant, barrier_constant_at, solve_cell_problem, solve_scheme, SolveReport, SolverPath, BARRIER_CAP};
pub use checks::{barrier_fields, check_comparison, check_comparison_with, lipschitz_in_ball, localization_gap, node_tags, perturbation_gap, sampled_closeness, PerturbationGap, ROW_SLACK};
