use serde::{Deserialize, Serialize};

use crate::lattice::{default_n_candidates, omega_nu, DirectionKind};
use crate::strip::{GridField, StripProblem};
use crate::{Error, Result};

/// Half-width of the mid-plane window used for the fit diagnostics.
const FIT_RADIUS: f64 = 2.0;

/// Bound on the tangential step of the lattice approximation per unit of `N`, for `n = 2`.
pub const LATTICE_STEP_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Normal slope of the linear profile matched at `z0 = tau - nu/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEstimate {
    pub mu: f64,
    /// Slope from the mean of `u - q.x` over the mid-plane window, for comparison with `mu`.
    pub mu_midplane: f64,
    pub z0: [f64; 2],
    /// Largest deviation of `u` from the matched profile over the mid-plane window.
    pub residual_fit: f64,
    pub problem: StripProblem,
}

/// Evaluates the matched linear profile `v = q.x + mu ((x - tau).nu + 1)`.
pub fn average_slope(u: &GridField, p: &StripProblem) -> Result<SlopeEstimate> {
    let z0 = p.z0();
    let g = &u.grid;
    let base = |x: [f64; 2]| p.q_dot(x) + p.bottom_offset;
    let mu = 2.0 * (u.interpolate(z0)? - base(z0));
    let steps = (FIT_RADIUS / g.h).floor() as i64;
    let (mut worst, mut sum, mut count) = (0.0f64, 0.0, 0usize);
    for k in -steps..=steps {
        let s = k as f64 * g.h;
        let x = g.at(s, -0.5);
        let dev = u.interpolate_frame(s, -0.5)? - base(x);
        worst = worst.max((dev - 0.5 * mu).abs());
        sum += dev;
        count += 1;
    }
    Ok(SlopeEstimate { mu, mu_midplane: 2.0 * sum / count as f64, z0, residual_fit: worst, problem: p.clone() })
}

/// Slope of the linear function matching `u` at `a_k`, `b_k` and the tangential derivative at `b_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalSlope {
    pub k: i64,
    pub a_k: [f64; 2],
    pub b_k: [f64; 2],
    pub tangential_slope: f64,
    pub mu_k: f64,
}

/// Local slope on the vertical strip `(k-1) N eps <= x_1 <= k N eps`.
pub fn local_slope(u: &GridField, p: &StripProblem, big_n: usize, k: i64) -> Result<LocalSlope> {
    let g = &u.grid;
    let width = big_n as f64 * p.eps;
    if !(width < 1.0) || big_n == 0 {
        return Err(Error::InvalidInput(format!("need 0 < N eps < 1, got N eps = {width}")));
    }
    if g.tangent[0].abs() < 1e-12 {
        return Err(Error::InvalidInput("vertical strips do not cross the boundary for this direction".into()));
    }
    let x1 = (k as f64 - 0.5) * width;
    let on_plane = |r: f64| -> (f64, [f64; 2]) {
        let s = (x1 - g.tau[0] - r * g.nu[0]) / g.tangent[0];
        (s, g.at(s, r))
    };
    let (sa, a) = on_plane(-0.5 * width);
    let (sb, b) = on_plane(-width);
    let ua = u.interpolate_frame(sa, -0.5 * width)?;
    let ub = u.interpolate_frame(sb, -width)?;
    let dt = (u.interpolate_frame(sb + g.h, -width)? - u.interpolate_frame(sb - g.h, -width)?) / (2.0 * g.h);
    let mu_k = (ua - ub - dt * (sa - sb)) / (0.5 * width);
    Ok(LocalSlope { k, a_k: a, b_k: b, tangential_slope: dt, mu_k })
}

/// Oscillation of `u - q.x` on a hyperplane at depth `d` and the matching flatness bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flatness {
    pub osc: f64,
    pub bound: f64,
}

/// Oscillation over nodes of `H_{-d}` within `R/2` of `tau`.
pub fn flatness_check(u: &GridField, p: &StripProblem, d: f64) -> Result<Flatness> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::InvalidInput(format!("depth must lie in (0, 1), got {d}")));
    }
    let g = &u.grid;
    let half = 0.5 * g.radius;
    if d > half {
        return Err(Error::OutOfGrid);
    }
    let reach = (half * half - d * d).sqrt();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=g.nx {
        let s = g.s(i);
        if s.abs() > reach {
            continue;
        }
        let v = u.interpolate_frame(s, -d)? - p.q_dot(g.at(s, -d));
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(Flatness { osc: hi - lo, bound: flatness_bound(p, d) })
}

/// Rational: `(1/d + 1) T eps`; otherwise the best `d^-1 eps (c N + omega(N)) + omega(N)`.
pub fn flatness_bound(p: &StripProblem, d: f64) -> f64 {
    let eps = p.eps;
    match p.nu.kind() {
        DirectionKind::Rational { t, .. } => (1.0 / d + 1.0) * t * eps,
        DirectionKind::IrrationalAtTolerance { .. } => default_n_candidates()
            .into_iter()
            .filter_map(|n| {
                let omega = omega_nu(&p.nu, n);
                let reach = eps * (LATTICE_STEP_BOUND * n as f64 + omega);
                (reach < 1.0).then(|| reach / d + omega)
            })
            .fold(f64::INFINITY, f64::min),
    }
}
