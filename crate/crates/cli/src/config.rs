//! JSON experiment configuration.

use serde::{Deserialize, Serialize};
use strip_homog::lattice::{classify_direction, Direction, DEFAULT_Q_MAX, DEFAULT_TOL};
use strip_homog::operators::{validate_f, validate_g, BoundaryFamily, BoundaryOperator, EllipticFamily, EllipticOperator};
use strip_homog::strip::{StripProblem, DEFAULT_MAX_ITER, DEFAULT_RADIUS, DEFAULT_TOL as SOLVE_TOL};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Solve,
    Sweep,
    Continuity,
    LipschitzQ,
    Validate,
    Lattice,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Solve => "solve",
            Kind::Sweep => "sweep",
            Kind::Continuity => "continuity",
            Kind::LipschitzQ => "lipschitz_q",
            Kind::Validate => "validate",
            Kind::Lattice => "lattice",
        }
    }
}

/// Interior operator; constants are derived from the family when omitted.
#[derive(Debug, Clone, Deserialize)]
pub struct OperatorSpec {
    #[serde(flatten)]
    pub family: EllipticFamily,
    pub lambda: Option<f64>,
    #[serde(rename = "Lambda")]
    pub big_lambda: Option<f64>,
    pub lip_coeff: Option<f64>,
}

/// Boundary operator; constants are derived from the family when omitted.
#[derive(Debug, Clone, Deserialize)]
pub struct BoundarySpec {
    #[serde(flatten)]
    pub family: BoundaryFamily,
    pub mu0: Option<f64>,
    pub m_lip: Option<f64>,
    pub c_obliq: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Integer entries are read as an exact rational direction.
    #[serde(default = "default_nu")]
    pub nu: Vec<f64>,
    #[serde(default)]
    pub tau: [f64; 2],
    /// Tangential component of `q`.
    #[serde(default)]
    pub q_t: f64,
}

fn default_nu() -> Vec<f64> {
    vec![0.0, 1.0]
}

impl Default for Geometry {
    fn default() -> Self {
        Self { nu: default_nu(), tau: [0.0, 0.0], q_t: 0.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub eps_list: Vec<f64>,
    /// Mesh size as a fraction of `eps`.
    #[serde(default = "default_h_per_eps")]
    pub h_per_eps: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub validation_samples: usize,
}

fn default_eps() -> f64 {
    0.125
}
fn default_h_per_eps() -> f64 {
    0.125
}
fn default_radius() -> f64 {
    DEFAULT_RADIUS
}
fn default_tol() -> f64 {
    SOLVE_TOL
}
fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}
fn default_samples() -> usize {
    2000
}

impl Default for Numerics {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

/// Checks on the outcome, each printed as one verdict line.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertions {
    /// Expected slope and its tolerance (solve).
    pub mu: Option<f64>,
    pub mu_tol: Option<f64>,
    /// Lower bound on the fitted decay exponent (sweep).
    pub min_exponent: Option<f64>,
    /// Slack factor on the Lipschitz bound (lipschitz_q).
    pub lipschitz_slack: Option<f64>,
    /// Largest relative excess of a deviation over the fitted `C * Lambda` (sweep).
    pub max_fit_residual: Option<f64>,
    /// Upper bound on every headline gap (continuity).
    pub max_gap: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuityCase {
    pub delta: f64,
    pub nu1: Vec<f64>,
    pub nu2: Vec<f64>,
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzSpec {
    /// Explicit pairs of tangential components.
    #[serde(default)]
    pub pairs: Vec<(f64, f64)>,
    /// Number of random pairs drawn from `[-q_max, q_max]` when `pairs` is empty.
    #[serde(default = "default_pair_count")]
    pub count: usize,
    #[serde(default = "default_q_max")]
    pub q_max: f64,
}

fn default_pair_count() -> usize {
    10
}
fn default_q_max() -> f64 {
    2.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    #[serde(default)]
    pub s_values: Vec<f64>,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub eps_values: Vec<f64>,
    #[serde(default = "default_search_cap")]
    pub search_cap: usize,
    /// Weyl sequence parameters for the discrepancy rows.
    #[serde(default)]
    pub x_values: Vec<f64>,
}

fn default_search_cap() -> usize {
    100_000
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub operator: Option<OperatorSpec>,
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub assertions: Assertions,
    #[serde(default)]
    pub continuity: Vec<ContinuityCase>,
    pub lipschitz: Option<LipschitzSpec>,
    pub lattice: Option<LatticeSpec>,
    #[serde(default)]
    pub output: Output,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

pub fn load(path: &std::path::Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn direction(v: &[f64]) -> Result<Direction, CliError> {
    if v.iter().all(|x| x.fract() == 0.0 && x.abs() < 1e12) {
        let ints: Vec<i64> = v.iter().map(|&x| x as i64).collect();
        Direction::from_integer(&ints).map_err(config_err)
    } else {
        classify_direction(v, DEFAULT_TOL, DEFAULT_Q_MAX).map_err(config_err)
    }
}

impl ExperimentConfig {
    pub fn operator(&self) -> Result<EllipticOperator, CliError> {
        let spec = self.operator.as_ref().ok_or_else(|| CliError::Config("missing \"operator\"".into()))?;
        let derived = match &spec.family {
            EllipticFamily::Linear { a } => EllipticOperator::linear(a.clone()),
            EllipticFamily::PucciPlus | EllipticFamily::PucciMinus => {
                let (Some(l), Some(u)) = (spec.lambda, spec.big_lambda) else {
                    return Err(CliError::Config("Pucci operators need \"lambda\" and \"Lambda\"".into()));
                };
                if matches!(spec.family, EllipticFamily::PucciPlus) {
                    EllipticOperator::pucci_plus(l, u)
                } else {
                    EllipticOperator::pucci_minus(l, u)
                }
            }
            EllipticFamily::BellmanIsaacs { controls } => EllipticOperator::bellman_isaacs(controls.clone()),
        }
        .map_err(config_err)?;
        EllipticOperator::new(
            spec.family.clone(),
            spec.lambda.unwrap_or(derived.lambda),
            spec.big_lambda.unwrap_or(derived.big_lambda),
            spec.lip_coeff.unwrap_or(derived.lip_coeff),
        )
        .map_err(config_err)
    }

    pub fn boundary(&self, nu: [f64; 2]) -> Result<BoundaryOperator, CliError> {
        let spec = self.boundary.as_ref().ok_or_else(|| CliError::Config("missing \"boundary\"".into()))?;
        let derived = match &spec.family {
            BoundaryFamily::Constant { g } => Ok(BoundaryOperator::constant(*g)),
            BoundaryFamily::Capillarity { theta } => BoundaryOperator::capillarity(theta.clone()),
            BoundaryFamily::LinearOblique { gamma, g } => BoundaryOperator::linear_oblique(gamma.clone(), g.clone(), nu),
        }
        .map_err(config_err)?;
        BoundaryOperator::new(
            spec.family.clone(),
            spec.mu0.unwrap_or(derived.mu0),
            spec.m_lip.unwrap_or(derived.m_lip),
            spec.c_obliq.unwrap_or(derived.c_obliq),
        )
        .map_err(config_err)
    }

    /// Runs the sampled structural checks on both operators.
    pub fn validate_operators(&self, f: &EllipticOperator, g: &BoundaryOperator, nu: [f64; 2]) -> Result<(), CliError> {
        let samples = self.numerics.validation_samples;
        let seed = self.numerics.seed;
        let mut failures = Vec::new();
        for (who, report) in [("F", validate_f(f, samples, seed)), ("G", validate_g(g, nu, samples, seed))] {
            for c in report.failures() {
                failures.push(format!("{who} {} check failed ({} of {} samples, worst slack {:e})", c.name, c.violations, c.samples, c.worst_slack));
            }
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(failures.join("; ")))
        }
    }

    /// The strip problem described by the geometry and numerics sections.
    pub fn problem(&self, skip_validate: bool) -> Result<StripProblem, CliError> {
        let nu = direction(&self.geometry.nu)?;
        let n2 = nu.planar().map_err(config_err)?;
        let f = self.operator()?;
        let g = self.boundary(n2)?;
        if !skip_validate {
            self.validate_operators(&f, &g, n2)?;
        }
        let eps = self.numerics.eps;
        let p = StripProblem::new(f, g, nu, eps, self.geometry.q_t)
            .map_err(config_err)?
            .with_tau(self.geometry.tau)
            .with_radius(self.numerics.radius)
            .with_h(eps * self.numerics.h_per_eps);
        p.validate().map_err(config_err)?;
        Ok(p)
    }
}
