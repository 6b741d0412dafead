//! The discrete optimal chain: Snell's-law recursion for the tangent offsets,
//! a shooting wrapper that hits a prescribed final offset, and the two-medium
//! refraction problem it is built from.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{tangent_point, Point2};
use crate::numeric::{bisect, golden_section};

/// One step of the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecursionStep {
    pub i: usize,
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub d: f64,
}

/// A chain `A_0, …, A_m` of points on consecutive tangent lines, spaced `α`
/// apart clockwise from `φ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteTrajectory {
    pub n: usize,
    pub alpha: f64,
    pub tau0: f64,
    pub steps: Vec<RecursionStep>,
    #[serde(skip)]
    pub points: Vec<Point2>,
    pub cost_weighted: f64,
}

/// Cost weighting of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weights {
    /// `(1/(m+1)) Σ i·d_i`, the exact average over the `m+1` tangency points.
    Upper,
    /// `Σ (i−1)/m · d_i`.
    Lower,
}

impl DiscreteTrajectory {
    /// Number of segments.
    pub fn m(&self) -> usize {
        self.steps.len()
    }

    /// Tangent offsets `t_0, …, t_m`.
    pub fn offsets(&self) -> Vec<f64> {
        std::iter::once(self.tau0).chain(self.steps.iter().map(|s| s.t)).collect()
    }

    /// Angles `y_0 = π/2, y_1, …, y_m`.
    pub fn angles(&self) -> Vec<f64> {
        std::iter::once(PI / 2.0).chain(self.steps.iter().map(|s| s.y)).collect()
    }

    /// Tangency angle of `A_i`.
    pub fn phi(&self, i: usize) -> f64 {
        wrap(TAU - self.alpha * i as f64)
    }

    /// Points in traversal order `A_m → A_0`.
    pub fn traversal(&self) -> Vec<Point2> {
        self.points.iter().rev().copied().collect()
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "alpha": self.alpha,
            "tau0": self.tau0,
            "cost_upper": discrete_cost(self, Weights::Upper),
            "cost_lower": discrete_cost(self, Weights::Lower),
            "t": self.offsets(),
        })
    }
}

fn wrap(phi: f64) -> f64 {
    let p = phi.rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

fn run(tau0: f64, alpha: f64, n: usize, m: usize) -> Result<DiscreteTrajectory> {
    let ta = (0.5 * alpha).tan();
    let sa = alpha.sin();
    let mut steps = Vec::with_capacity(m);
    let mut points = Vec::with_capacity(m + 1);
    points.push(tangent_point(0.0, tau0));
    let (mut y_prev, mut t_prev) = (PI / 2.0, tau0);
    let mut weighted = 0.0;
    for i in 1..=m {
        let x = y_prev - alpha;
        if x <= 0.0 {
            return Err(Error::AngleDomain { index: i, angle: x });
        }
        if t_prev <= ta {
            return Err(Error::TriangleDegenerate { index: i, t: t_prev, limit: ta });
        }
        let fi = i as f64;
        let sx = x.sin();
        let y = ((fi / (fi + 1.0)) * x.cos()).acos();
        let t = (t_prev - ta) * y_prev.sin() / sx - ta;
        let d = (t_prev - ta) * sa / sx;
        weighted += fi * d;
        steps.push(RecursionStep { i, x, y, t, d });
        points.push(tangent_point(TAU - alpha * fi, t));
        y_prev = y;
        t_prev = t;
    }
    Ok(DiscreteTrajectory { n, alpha, tau0, steps, points, cost_weighted: weighted / (m as f64 + 1.0) })
}

/// Run the recursion `m` steps forward from `t_0 = tau0` with `α = 2π/n`.
pub fn forward_recursion(tau0: f64, n: usize, m: usize) -> Result<DiscreteTrajectory> {
    if n < 5 || m > n {
        return Err(Error::InvalidInput(format!("need n >= 5 and m <= n (n = {n}, m = {m})")));
    }
    if !(tau0 > 0.0) {
        return Err(Error::InvalidInput(format!("tau0 must be positive, got {tau0}")));
    }
    run(tau0, TAU / n as f64, n, m)
}

/// Angular spacing `2(π − θ)/k` of a `(θ, k)` chain.
pub fn theta_alpha(theta: f64, k: usize) -> f64 {
    2.0 * (PI - theta) / k as f64
}

/// `k` steps of the recursion with the spacing of a `(θ, k)` chain.
pub fn theta_recursion(tau0: f64, theta: f64, k: usize) -> Result<DiscreteTrajectory> {
    let alpha = theta_alpha(theta, k);
    run(tau0, alpha, k, k)
}

/// Bracket on `t_0` used by [`shoot_theta`].
pub fn shooting_bracket(theta: f64, k: usize) -> (f64, f64) {
    ((0.5 * theta_alpha(theta, k)).tan() + 1e-6, 10.0)
}

/// `t_k(τ0) − tan θ`. A degenerate triangle means `t_0` is too small to carry
/// the chain to the end, so it is reported as a negative miss.
fn shooting_miss(tau0: f64, theta: f64, k: usize) -> Result<f64> {
    match theta_recursion(tau0, theta, k) {
        Ok(tr) => Ok(tr.steps[k - 1].t - theta.tan()),
        Err(Error::TriangleDegenerate { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// The chain of `k` segments whose last offset is `t_k = tan θ`.
pub fn shoot_theta(theta: f64, k: usize) -> Result<DiscreteTrajectory> {
    if !(0.0..PI / 2.0).contains(&theta) {
        return Err(Error::InvalidInput(format!("theta must lie in [0, pi/2), got {theta}")));
    }
    if k < 5 {
        return Err(Error::InvalidInput(format!("k must be at least 5, got {k}")));
    }
    let (lo, hi) = shooting_bracket(theta, k);
    let f_lo = shooting_miss(lo, theta, k)?;
    let f_hi = shooting_miss(hi, theta, k)?;
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::NoBracket { lo, hi, f_lo, f_hi });
    }
    let mut err = None;
    let tau0 = bisect(
        |t| match shooting_miss(t, theta, k) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        0.0,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    // The end offset moves by many ulps per ulp of t_0, so the chain itself is
    // rebuilt backward from t_k = tan θ, where the recursion contracts.
    let tr = backward_chain(theta, k)?;
    debug_assert!((tr.tau0 - tau0).abs() <= 1e-9 * (1.0 + tau0));
    Ok(tr)
}

/// The `(θ, k)` chain obtained by running the offset recursion in reverse from
/// `t_k = tan θ`.
pub fn backward_chain(theta: f64, k: usize) -> Result<DiscreteTrajectory> {
    let alpha = theta_alpha(theta, k);
    let ta = (0.5 * alpha).tan();
    let sa = alpha.sin();
    let mut xy = Vec::with_capacity(k + 1);
    xy.push((f64::NAN, PI / 2.0));
    for i in 1..=k {
        let x = xy[i - 1].1 - alpha;
        if x <= 0.0 {
            return Err(Error::AngleDomain { index: i, angle: x });
        }
        let fi = i as f64;
        xy.push((x, ((fi / (fi + 1.0)) * x.cos()).acos()));
    }
    let mut t = vec![0.0; k + 1];
    t[k] = theta.tan();
    for i in (1..=k).rev() {
        t[i - 1] = (t[i] + ta) * xy[i].0.sin() / xy[i - 1].1.sin() + ta;
    }
    let mut steps = Vec::with_capacity(k);
    let mut points = Vec::with_capacity(k + 1);
    points.push(tangent_point(0.0, t[0]));
    let mut weighted = 0.0;
    for i in 1..=k {
        if t[i - 1] <= ta {
            return Err(Error::TriangleDegenerate { index: i, t: t[i - 1], limit: ta });
        }
        let (x, y) = xy[i];
        let d = (t[i - 1] - ta) * sa / x.sin();
        weighted += i as f64 * d;
        steps.push(RecursionStep { i, x, y, t: t[i], d });
        points.push(tangent_point(TAU - alpha * i as f64, t[i]));
    }
    Ok(DiscreteTrajectory { n: k, alpha, tau0: t[0], steps, points, cost_weighted: weighted / (k as f64 + 1.0) })
}

/// Weighted length of the chain.
pub fn discrete_cost(traj: &DiscreteTrajectory, weights: Weights) -> f64 {
    let m = traj.m() as f64;
    match weights {
        Weights::Upper => traj.steps.iter().map(|s| s.i as f64 * s.d).sum::<f64>() / (m + 1.0),
        Weights::Lower => traj.steps.iter().map(|s| (s.i as f64 - 1.0) / m * s.d).sum(),
    }
}

/// Upper-weighted cost of arbitrary offsets `t_0..t_k` on a `(θ, k)` chain,
/// measured directly from the points.
pub fn chain_cost(theta: f64, t: &[f64]) -> f64 {
    let k = t.len() - 1;
    let alpha = theta_alpha(theta, k);
    let pts: Vec<Point2> = t.iter().enumerate().map(|(i, &ti)| tangent_point(TAU - alpha * i as f64, ti)).collect();
    pts.windows(2).enumerate().map(|(j, w)| (j + 1) as f64 * w[0].dist(w[1])).sum::<f64>() / (k as f64 + 1.0)
}

/// Optimal crossing of the interface `y = 0` between two media.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefractionInstance {
    pub a1: Point2,
    pub a2: Point2,
    pub s1: f64,
    pub s2: f64,
    /// Crossing abscissa.
    pub x: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl RefractionInstance {
    /// `sin α1 / sin α2 − s1/s2`.
    pub fn snell_residual(&self) -> f64 {
        self.alpha1.sin() / self.alpha2.sin() - self.s1 / self.s2
    }

    pub fn travel_time(&self, x: f64) -> f64 {
        travel_time(self.a1, self.a2, self.s1, self.s2, x)
    }
}

fn travel_time(a1: Point2, a2: Point2, s1: f64, s2: f64, x: f64) -> f64 {
    (a1.x - x).hypot(a1.y) / s1 + (a2.x - x).hypot(a2.y) / s2
}

/// Minimize the travel time `|A1 L|/s1 + |L A2|/s2` over points `L` of the
/// interface.
///
/// The travel time is strictly convex in the crossing abscissa. Golden
/// section brackets the minimizer to `1e-10`; the derivative, which is
/// increasing, is then bisected to machine precision so that the angle
/// relation holds to rounding.
pub fn refraction_optimum(a1: Point2, a2: Point2, s1: f64, s2: f64) -> Result<RefractionInstance> {
    if !(a1.y > 0.0 && a2.y < 0.0) {
        return Err(Error::InvalidInput("a1 must lie above and a2 below the interface".into()));
    }
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::InvalidInput("speeds must be positive".into()));
    }
    let lo = a1.x.min(a2.x);
    let hi = a1.x.max(a2.x);
    let slope = |x: f64| (x - a1.x) / (a1.x - x).hypot(a1.y) / s1 + (x - a2.x) / (a2.x - x).hypot(a2.y) / s2;
    let x = if hi - lo <= f64::EPSILON * (1.0 + hi.abs()) {
        0.5 * (lo + hi)
    } else {
        let g = golden_section(|x| travel_time(a1, a2, s1, s2, x), lo, hi, 1e-10);
        // Function values stop resolving the minimizer near sqrt(eps), so
        // widen around the golden estimate until the slope changes sign.
        let mut w = 1e-9 * (1.0 + g.x.abs());
        loop {
            let (a, b) = ((g.x - w).max(lo), (g.x + w).min(hi));
            if slope(a) <= 0.0 && slope(b) >= 0.0 {
                break bisect(slope, a, b, 0.0)?;
            }
            if a <= lo && b >= hi {
                break g.x;
            }
            w *= 4.0;
        }
    };
    let alpha1 = (x - a1.x).atan2(a1.y).abs();
    let alpha2 = (a2.x - x).atan2(-a2.y).abs();
    Ok(RefractionInstance { a1, a2, s1, s2, x, alpha1, alpha2 })
}
