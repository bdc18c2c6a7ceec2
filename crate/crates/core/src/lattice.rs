//! Lattice arithmetic for boundary directions.
//!
//! A direction `v` is *rational* when it is a real multiple of an integer vector. On floats this
//! is only decidable up to a tolerance, so [`classify_direction`] takes an explicit `(tol, q_max)`
//! contract. Everything in this module is generic in the ambient dimension.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default tolerance for [`classify_direction`].
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default max-norm cap on integer representatives for [`classify_direction`].
pub const DEFAULT_Q_MAX: i64 = 100_000;

/// Rationality metadata of a [`Direction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DirectionKind {
    /// `t * v = p` with `p` primitive and `t = |p|`.
    Rational { p: Vec<i64>, t: f64 },
    /// No integer representative was found within the tolerance contract.
    IrrationalAtTolerance { tol: f64 },
}

/// A unit vector together with its rationality metadata and generator slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    v: Vec<f64>,
    kind: DirectionKind,
    m_generator: f64,
}

impl Direction {
    /// Exact rational direction spanned by an integer vector.
    pub fn from_integer(p: &[i64]) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidInput("directions need at least two components".into()));
        }
        let g = p.iter().fold(0i64, |acc, &c| acc.gcd(&c));
        if g == 0 {
            return Err(Error::ZeroVector);
        }
        let p: Vec<i64> = p.iter().map(|c| c / g).collect();
        let t = norm_i(&p);
        let v: Vec<f64> = p.iter().map(|&c| c as f64 / t).collect();
        let m_generator = generator_slope(&v);
        Ok(Self { v, kind: DirectionKind::Rational { p, t }, m_generator })
    }

    /// The upward normal `e_n`.
    pub fn unit_normal(n: usize) -> Self {
        let mut p = vec![0; n.max(2)];
        *p.last_mut().unwrap() = 1;
        Self::from_integer(&p).expect("unit vector is nonzero")
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn kind(&self) -> &DirectionKind {
        &self.kind
    }

    pub fn m_generator(&self) -> f64 {
        self.m_generator
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.kind, DirectionKind::Rational { .. })
    }

    /// Index of the component of largest magnitude, largest index on ties.
    pub fn pivot(&self) -> usize {
        pivot_index(&self.v)
    }

    /// The vector `(1, .., 1, m, 1, .., 1)` orthogonal to `v`, with `m` at the pivot.
    pub fn generator_vector(&self) -> Vec<f64> {
        let piv = self.pivot();
        (0..self.dim()).map(|i| if i == piv { self.m_generator } else { 1.0 }).collect()
    }

    /// Planar view of the direction.
    pub fn planar(&self) -> Result<[f64; 2]> {
        match self.v.as_slice() {
            [a, b] => Ok([*a, *b]),
            _ => Err(Error::InvalidInput(format!("expected a planar direction, got dimension {}", self.dim()))),
        }
    }
}

/// Result of [`approx_period_t_s`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxPeriod {
    pub t: f64,
    /// Distance from `t * v` to the integer lattice.
    pub distance: f64,
    /// The a priori bound `sqrt(n) * s^-(n-1)`.
    pub bound: f64,
}

impl ApproxPeriod {
    pub fn within_bound(&self) -> bool {
        self.t <= self.bound * (1.0 + 1e-12)
    }
}

/// Output of [`dirichlet_approx`].
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletApprox {
    pub q: i64,
    pub p: Vec<i64>,
    pub max_error: f64,
}

/// Output of [`lattice_approx_on_hyperplane`].
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneApprox {
    pub y: Vec<f64>,
    pub tangential_error: f64,
    pub normal_error: f64,
}

/// Which branch of the rate function produced a [`RateBound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateBranch {
    Rational { t_nu: f64 },
    Irrational { n_star: usize, omega_at_n_star: f64, k_star: f64 },
}

/// Value of the rate function at a given `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    pub epsilon: f64,
    pub lambda_value: f64,
    pub branch: RateBranch,
}

/// Normalizes `v` and decides whether it is rational under `(tol, q_max)`.
///
/// A rational direction is snapped onto `p / |p|` so that the metadata is exact.
pub fn classify_direction(v: &[f64], tol: f64, q_max: i64) -> Result<Direction> {
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite);
    }
    if v.len() < 2 {
        return Err(Error::InvalidInput("directions need at least two components".into()));
    }
    if !(tol > 0.0) || q_max < 1 {
        return Err(Error::InvalidInput("tol must be positive and q_max at least 1".into()));
    }
    let len = norm(v);
    if len == 0.0 {
        return Err(Error::ZeroVector);
    }
    let u: Vec<f64> = v.iter().map(|c| c / len).collect();
    match rational_representative(&u, tol, q_max) {
        Some(p) => Direction::from_integer(&p),
        None => Ok(Direction { m_generator: generator_slope(&u), v: u, kind: DirectionKind::IrrationalAtTolerance { tol } }),
    }
}

fn rational_representative(u: &[f64], tol: f64, q_max: i64) -> Option<Vec<i64>> {
    let piv = pivot_index(u);
    let scale = u[piv].abs();
    let mut p = vec![0i64; u.len()];
    for s in 1..=q_max {
        let t = s as f64 / scale;
        for (pi, c) in p.iter_mut().zip(u) {
            *pi = (c * t).round() as i64;
        }
        let pn = norm_i(&p);
        let miss = u.iter().zip(&p).map(|(c, &pi)| (c - pi as f64 / pn).powi(2)).sum::<f64>().sqrt();
        if miss <= tol / pn {
            return Some(p);
        }
    }
    None
}

/// Exact period `T` with `T v` in the integer lattice.
pub fn period_t(d: &Direction) -> Result<f64> {
    match d.kind {
        DirectionKind::Rational { t, .. } => Ok(t),
        DirectionKind::IrrationalAtTolerance { .. } => Err(Error::NotRational),
    }
}

/// Smallest `T >= 1` with `dist(T v, Z^n) <= s`.
///
/// For each integer vector `p` the admissible `T` form the interval centred at `p.v` of half
/// width `sqrt(s^2 - |p - (p.v) v|^2)`; candidates `p` are enumerated by the pivot component.
pub fn approx_period_t_s(d: &Direction, s: f64, search_cap: usize) -> Result<ApproxPeriod> {
    if !(0.0..0.5).contains(&s) {
        return Err(Error::InvalidInput(format!("s must lie in [0, 1/2), got {s}")));
    }
    let v = d.v();
    let n = v.len();
    let piv = d.pivot();
    let vp = v[piv].abs();
    let sign = v[piv].signum();
    let slack = 1e-12;
    let mut best: Option<(f64, f64)> = None;
    let others: Vec<usize> = (0..n).filter(|&i| i != piv).collect();
    let combos = 3usize.pow(others.len() as u32);
    let mut p = vec![0i64; n];
    for k in 0..=search_cap {
        let t0 = k as f64 / vp;
        if let Some((bt, _)) = best {
            if (k as f64 - s - 1.0) / vp > bt {
                break;
            }
        }
        p[piv] = sign as i64 * k as i64;
        for code in 0..combos {
            let mut c = code;
            for &j in &others {
                p[j] = (t0 * v[j]).round() as i64 + (c % 3) as i64 - 1;
                c /= 3;
            }
            let pv: f64 = p.iter().zip(v).map(|(&a, b)| a as f64 * b).sum();
            let perp2: f64 = p.iter().zip(v).map(|(&a, b)| (a as f64 - pv * b).powi(2)).sum();
            let reach = s * s - perp2;
            if reach < -slack {
                continue;
            }
            let w = reach.max(0.0).sqrt();
            if pv + w < 1.0 {
                continue;
            }
            let t = (pv - w).max(1.0);
            if best.is_none_or(|(bt, _)| t < bt) {
                let dist = p.iter().zip(v).map(|(&a, b)| (t * b - a as f64).powi(2)).sum::<f64>().sqrt();
                best = Some((t, dist));
            }
        }
    }
    let (t, distance) = best.ok_or(Error::SearchExhausted { cap: search_cap })?;
    let bound = if s == 0.0 { f64::INFINITY } else { (n as f64).sqrt() * s.powi(-(n as i32 - 1)) };
    Ok(ApproxPeriod { t, distance, bound })
}

/// Smallest `q <= big_n` with `|q alpha_i - p_i| <= big_n^(-1/n)` for all `i`.
///
/// Strict solutions are preferred so that a half-integer `alpha` is resolved by its
/// denominator; the non-strict bound is used only when no strict solution exists.
pub fn dirichlet_approx(alphas: &[f64], big_n: u64) -> Result<DirichletApprox> {
    if big_n < 1 || alphas.is_empty() {
        return Err(Error::InvalidInput("need N >= 1 and at least one alpha".into()));
    }
    if alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite);
    }
    let bound = (big_n as f64).powf(-1.0 / alphas.len() as f64);
    let approx = |q: u64| {
        let p: Vec<i64> = alphas.iter().map(|a| (q as f64 * a).round() as i64).collect();
        let err = alphas.iter().zip(&p).map(|(a, &pi)| (q as f64 * a - pi as f64).abs()).fold(0.0, f64::max);
        DirichletApprox { q: q as i64, p, max_error: err }
    };
    if let Some(hit) = (1..=big_n).map(approx).find(|a| a.max_error < bound) {
        return Ok(hit);
    }
    let best = (1..=big_n)
        .map(approx)
        .min_by(|a, b| a.max_error.total_cmp(&b.max_error))
        .expect("N >= 1");
    Ok(best)
}

/// Extreme discrepancy of `{k x mod 1 : 1 <= k <= N}` over half-open subintervals of `[0, 1]`.
///
/// Uses the sorted-sample identity `1/N + max_i (i/N - p_i) - min_i (i/N - p_i)`.
pub fn discrepancy(x: f64, big_n: usize) -> f64 {
    assert!(big_n >= 1, "discrepancy needs N >= 1");
    let mut pts = weyl_points(x, big_n);
    pts.sort_by(f64::total_cmp);
    let nf = big_n as f64;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for (i, p) in pts.iter().enumerate() {
        let d = (i + 1) as f64 / nf - p;
        hi = hi.max(d);
        lo = lo.min(d);
    }
    (1.0 / nf + hi - lo).min(1.0)
}

/// The samples `frac(k x)` for `k = 1..=N`.
pub fn weyl_points(x: f64, big_n: usize) -> Vec<f64> {
    (1..=big_n).map(|k| (k as f64 * x).rem_euclid(1.0) + 0.0).collect()
}

/// Discrepancy of the generator slope of `d`.
pub fn omega_nu(d: &Direction, big_n: usize) -> f64 {
    discrepancy(d.m_generator(), big_n)
}

/// Finds `y = x0 (mod eps Z^n)` close to `x` and to the hyperplane through `x0` normal to `d`.
pub fn lattice_approx_on_hyperplane(
    x: &[f64],
    x0: &[f64],
    d: &Direction,
    eps: f64,
    big_n: usize,
) -> Result<HyperplaneApprox> {
    let v = d.v();
    let n = v.len();
    if x.len() != n || x0.len() != n {
        return Err(Error::InvalidInput("point dimensions do not match the direction".into()));
    }
    if !(eps > 0.0) || big_n < 1 {
        return Err(Error::InvalidInput("need eps > 0 and N >= 1".into()));
    }
    let c: Vec<f64> = x.iter().zip(x0).map(|(a, b)| (a - b) / eps).collect();
    let off = dot(&c, v) * eps;
    if off.abs() > 1e-9 * (1.0 + norm(&c) * eps) {
        return Err(Error::InvalidInput(format!("x is off the hyperplane through x0 by {off:e}")));
    }
    let finish = |z: &[f64], normal: f64| {
        let y: Vec<f64> = x0.iter().zip(z).map(|(a, zi)| a + eps * zi).collect();
        let tangential_error = norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        HyperplaneApprox { y, tangential_error, normal_error: normal }
    };
    if let DirectionKind::Rational { p, t } = d.kind() {
        let z = nearest_orthogonal_integer(&c, p, *t);
        return Ok(finish(&z, 0.0));
    }
    let piv = d.pivot();
    let a = d.generator_vector();
    let omega = omega_nu(d, big_n);
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for k in 0..=big_n {
        let b: Vec<f64> = c.iter().zip(&a).map(|(ci, ai)| ci + k as f64 * ai).collect();
        for pick in [b[piv].floor(), b[piv].ceil()] {
            let z: Vec<f64> = (0..n).map(|i| if i == piv { pick } else { b[i].round() }).collect();
            let normal = eps * dot(&z, v).abs();
            let dist = norm(&z.iter().zip(&c).map(|(p, q)| p - q).collect::<Vec<_>>());
            let better = match &best {
                None => true,
                Some((bn, bd, _)) => normal < *bn || (normal == *bn && dist < *bd),
            };
            if better {
                best = Some((normal, dist, z));
            }
        }
    }
    let (normal, _, z) = best.expect("k = 0 is always a candidate");
    if normal < eps * omega {
        Ok(finish(&z, normal))
    } else {
        Err(Error::ApproximationFailed { n: big_n, best: normal })
    }
}

fn nearest_orthogonal_integer(c: &[f64], p: &[i64], t: f64) -> Vec<f64> {
    if let [p0, p1] = p {
        let perp = [-(*p1) as f64, *p0 as f64];
        let j = (dot(c, &perp) / dot(&perp, &perp)).round();
        return vec![j * perp[0], j * perp[1]];
    }
    let r = t.ceil() as i64 + 1;
    let n = c.len();
    let side = (2 * r + 1) as usize;
    let centre: Vec<i64> = c.iter().map(|ci| ci.round() as i64).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..side.pow(n as u32) {
        let mut k = code;
        let z: Vec<i64> = centre
            .iter()
            .map(|ci| {
                let off = (k % side) as i64 - r;
                k /= side;
                ci + off
            })
            .collect();
        if z.iter().zip(p).map(|(a, b)| a * b).sum::<i64>() != 0 {
            continue;
        }
        let zf: Vec<f64> = z.iter().map(|&a| a as f64).collect();
        let dist = norm(&zf.iter().zip(c).map(|(a, b)| a - b).collect::<Vec<_>>());
        if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
            best = Some((dist, zf));
        }
    }
    best.map(|(_, z)| z).unwrap_or_else(|| vec![0.0; n])
}

/// Powers of two `1, 2, 4, .., 2^20`.
pub fn default_n_candidates() -> Vec<usize> {
    (0..=20).map(|e| 1usize << e).collect()
}

/// `inf_{0<k<1} eps^k * a + eps^(1-k)` together with the (clamped) minimizing `k`.
pub fn balanced_infimum(eps: f64, a: f64) -> (f64, f64) {
    let k = 0.5 * (1.0 - a.ln() / eps.ln());
    if k <= 0.0 {
        (a + eps, f64::EPSILON)
    } else if k >= 1.0 {
        (a * eps + 1.0, 1.0 - f64::EPSILON)
    } else {
        (2.0 * (eps * a).sqrt(), k)
    }
}

/// The rate bound: the period branch for rational directions, the discrepancy branch otherwise.
pub fn rate_function_lambda(eps: f64, d: &Direction, n_candidates: &[usize]) -> Result<RateBound> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {eps}")));
    }
    if let DirectionKind::Rational { t, .. } = d.kind() {
        let (value, _) = balanced_infimum(eps, *t);
        return Ok(RateBound { epsilon: eps, lambda_value: value, branch: RateBranch::Rational { t_nu: *t } });
    }
    let mut best: Option<RateBound> = None;
    for &nn in n_candidates.iter().filter(|&&nn| nn >= 1) {
        let omega = omega_nu(d, nn);
        let (bal, k) = balanced_infimum(eps, nn as f64);
        let value = bal + omega;
        if best.is_none_or(|b| value < b.lambda_value) {
            best = Some(RateBound {
                epsilon: eps,
                lambda_value: value,
                branch: RateBranch::Irrational { n_star: nn, omega_at_n_star: omega, k_star: k },
            });
        }
    }
    best.ok_or_else(|| Error::InvalidInput("empty N candidate list".into()))
}

/// Euclidean distance from `x` to the integer lattice.
pub fn dist_to_lattice(x: &[f64]) -> f64 {
    x.iter().map(|c| (c - c.round()).powi(2)).sum::<f64>().sqrt()
}

fn pivot_index(v: &[f64]) -> usize {
    let mut piv = 0;
    for (i, c) in v.iter().enumerate() {
        if c.abs() >= v[piv].abs() {
            piv = i;
        }
    }
    piv
}

fn generator_slope(v: &[f64]) -> f64 {
    let piv = pivot_index(v);
    let rest: f64 = v.iter().enumerate().filter(|&(i, _)| i != piv).map(|(_, c)| c).sum();
    -rest / v[piv] + 0.0
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn norm_i(p: &[i64]) -> f64 {
    (p.iter().map(|&c| (c as f64).powi(2)).sum::<f64>()).sqrt()
}
