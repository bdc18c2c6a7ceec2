//! Homogenized slopes and the quantitative experiments built on the strip solver.

mod continuity;
mod experiments;
mod slope;

pub use continuity::{direction_continuity, ContinuityConfig, ContinuityReport, ContinuityRow};
pub use experiments::{
    epsilon_sweep, first_homogenized_slope, least_squares_slope, lipschitz_in_q, q_lipschitz_bound, solve_slope,
    RateCurve, RateEntry, FIRST_HOMOGENIZATION_RADIUS,
};
pub use slope::{average_slope, flatness_bound, flatness_check, local_slope, Flatness, LocalSlope, SlopeEstimate, LATTICE_STEP_BOUND};
