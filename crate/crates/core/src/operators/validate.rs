use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::boundary::BoundaryOperator;
use super::elliptic::{eval_f, EllipticOperator};
use super::matrix::Sym2;

/// Finite-difference step for derivative checks.
pub const FD_STEP: f64 = 1e-5;
/// Relative tolerance applied to every sampled inequality.
pub const FD_REL_TOL: f64 = 1e-6;

/// Outcome of one sampled inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub samples: usize,
    pub violations: usize,
    /// Smallest margin by which the inequality held (negative on violation).
    pub worst_slack: f64,
    /// Largest constant the samples actually required.
    pub attained: f64,
}

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        Self { name, samples: 0, violations: 0, worst_slack: f64::INFINITY, attained: 0.0 }
    }

    fn record(&mut self, slack: f64, tol: f64, attained: f64) {
        self.samples += 1;
        self.worst_slack = self.worst_slack.min(slack);
        self.attained = self.attained.max(attained);
        if slack < -tol {
            self.violations += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.violations == 0)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| c.violations > 0)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn random_sym(rng: &mut ChaCha8Rng, scale: f64) -> Sym2 {
    Sym2::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

fn random_psd(rng: &mut ChaCha8Rng) -> Sym2 {
    let b = [[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]];
    Sym2::new(
        b[0][0] * b[0][0] + b[0][1] * b[0][1],
        b[0][0] * b[1][0] + b[0][1] * b[1][1],
        b[1][0] * b[1][0] + b[1][1] * b[1][1],
    )
}

fn random_y(rng: &mut ChaCha8Rng) -> [f64; 2] {
    [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]
}

/// Samples ellipticity, positive homogeneity and the Lipschitz inequality of `op`.
pub fn validate_f(op: &EllipticOperator, samples: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ell = CheckOutcome::new("ellipticity");
    let mut hom = CheckOutcome::new("homogeneity");
    let mut lip = CheckOutcome::new("lipschitz");
    for _ in 0..samples {
        let m = random_sym(&mut rng, 2.0);
        let n = random_psd(&mut rng);
        let y = random_y(&mut rng);
        let y2 = random_y(&mut rng);
        let t = rng.random_range(0.05..5.0);
        let m2 = random_sym(&mut rng, 2.0);

        let f = eval_f(op, &m, &y);
        let d = f - eval_f(op, &m.add(&n), &y);
        let tr = n.trace();
        let tol = 1e-10 * (1.0 + f.abs() + tr);
        ell.record((d - op.lambda * tr).min(op.big_lambda * tr - d), tol, if tr > 0.0 { d / tr } else { 0.0 });

        let ft = eval_f(op, &m.scale(t), &y);
        let err = (ft - t * f).abs();
        hom.record(1e-10 * (1.0 + (t * f).abs()) - err, 0.0, err);

        let lhs = (f - eval_f(op, &m2, &y2)).abs();
        let dy = (y[0] - y2[0]).hypot(y[1] - y2[1]);
        let rhs = dy * (1.0 + m.spectral_norm() + m2.spectral_norm()) + m.sub(&m2).spectral_norm();
        lip.record(op.lip_coeff * rhs - lhs, 1e-10 * (1.0 + lhs), if rhs > 0.0 { lhs / rhs } else { 0.0 });
    }
    ValidationReport { checks: vec![ell, hom, lip] }
}

/// Samples growth, Lipschitz regularity and obliqueness of `op` against the direction `nu`.
pub fn validate_g(op: &BoundaryOperator, nu: [f64; 2], samples: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut growth = CheckOutcome::new("growth");
    let mut reg = CheckOutcome::new("regularity");
    let mut obl = CheckOutcome::new("obliqueness");
    let mut defined = CheckOutcome::new("nondegenerate");
    let mut bound = CheckOutcome::new("obliqueness_below_one");
    bound.record(1.0 - op.c_obliq, 0.0, op.c_obliq);
    if op.c_obliq >= 1.0 {
        bound.violations = 1;
    }
    let g = |p: [f64; 2], y: &[f64; 2]| op.eval(p, y, nu);
    for _ in 0..samples {
        let p: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let y = random_y(&mut rng);
        let pn = 1.0 + p[0].hypot(p[1]);
        let eval = (|| {
            let v = g(p, &y)?;
            let dp = |e: [f64; 2]| -> crate::Result<f64> {
                let plus = g([p[0] + FD_STEP * e[0], p[1] + FD_STEP * e[1]], &y)?;
                let minus = g([p[0] - FD_STEP * e[0], p[1] - FD_STEP * e[1]], &y)?;
                Ok((plus - minus) / (2.0 * FD_STEP))
            };
            let dy = |a: usize| -> crate::Result<f64> {
                let (mut yp, mut ym) = (y, y);
                yp[a] += FD_STEP;
                ym[a] -= FD_STEP;
                Ok((g(p, &yp)? - g(p, &ym)?) / (2.0 * FD_STEP))
            };
            let gp = [dp([1.0, 0.0])?, dp([0.0, 1.0])?];
            let gy = [dy(0)?, dy(1)?];
            Ok::<_, crate::Error>((v, gp, gy, dp(nu)?))
        })();
        let Ok((v, gp, gy, gnu)) = eval else {
            defined.record(-1.0, 0.0, 1.0);
            continue;
        };
        defined.record(0.0, 0.0, 0.0);
        growth.record(op.mu0 * pn - v.abs(), FD_REL_TOL * op.mu0.max(1.0) * pn, v.abs() / pn);
        let gp_norm = gp[0].hypot(gp[1]);
        let gy_norm = gy[0].hypot(gy[1]);
        let need = gp_norm.max(gy_norm / pn);
        reg.record(op.m_lip - need, FD_REL_TOL * op.m_lip.max(1.0), need);
        obl.record(op.c_obliq - gnu.abs(), FD_REL_TOL, gnu.abs());
    }
    ValidationReport { checks: vec![growth, reg, obl, defined, bound] }
}
