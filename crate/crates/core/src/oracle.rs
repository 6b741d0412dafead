//! Brute-force average inspection cost of an explicit polyline, straight
//! from the visibility definition.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{first_inspection_with, Boundary, PerimeterPoint, Point2, Polyline};
use crate::ode::OdeSolution;

/// Worst-case optimum for the full problem, `1 + √3 + 7π/6`.
pub const WORST_CASE_OPTIMUM: f64 = 1.0 + 1.732_050_807_568_877_2 + 7.0 * PI / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    /// Mean first-inspection arclength over the inspected samples.
    pub mean_cost: f64,
    pub samples: usize,
    pub never_count: usize,
    pub max_cost: f64,
    pub trajectory_length: f64,
}

fn summarize(traj: &Polyline, costs: Vec<Option<f64>>) -> OracleResult {
    let samples = costs.len();
    let mut sum = 0.0;
    let mut seen = 0usize;
    let mut max_cost: f64 = 0.0;
    for c in costs.iter().flatten() {
        sum += c;
        seen += 1;
        max_cost = max_cost.max(*c);
    }
    OracleResult {
        mean_cost: if seen > 0 { sum / seen as f64 } else { f64::NAN },
        samples,
        never_count: samples - seen,
        max_cost,
        trajectory_length: traj.length(),
    }
}

/// Mean first-inspection arclength over the given target angles.
pub fn average_cost_at_angles(traj: &Polyline, angles: &[f64], rule: Boundary) -> OracleResult {
    let costs = angles.par_iter().map(|&phi| first_inspection_with(traj, PerimeterPoint::new(phi), rule)).collect();
    summarize(traj, costs)
}

/// Midpoints of `m` equal cells of `[a, a + span]`.
pub fn midpoint_angles(a: f64, span: f64, m: usize) -> Vec<f64> {
    (0..m).map(|j| a + span * (j as f64 + 0.5) / m as f64).collect()
}

/// Average over the whole perimeter, sampled at cell midpoints shifted by
/// `phase`.
pub fn average_cost_full_phase(traj: &Polyline, m: usize, phase: f64) -> Result<OracleResult> {
    if traj.vertices()[0].norm() > 1e-12 {
        return Err(Error::InvalidInput("a full trajectory must start at the origin".into()));
    }
    if m < 100 {
        return Err(Error::InvalidInput(format!("need at least 100 samples, got {m}")));
    }
    Ok(average_cost_at_angles(traj, &midpoint_angles(phase, TAU, m), Boundary::Closed))
}

/// Average over the whole perimeter with `m` midpoint samples.
pub fn average_cost_full(traj: &Polyline, m: usize) -> Result<OracleResult> {
    average_cost_full_phase(traj, m, 0.0)
}

/// Average over the arc `[2θ, 2π]` for a trajectory that starts at
/// `(1, tan θ)`, measured from that start.
pub fn average_cost_partial(traj: &Polyline, theta: f64, m: usize) -> Result<OracleResult> {
    if !(0.0..PI / 2.0).contains(&theta) {
        return Err(Error::InvalidInput(format!("theta must lie in [0, pi/2), got {theta}")));
    }
    let start = traj.vertices()[0];
    if (start.x - 1.0).abs() > 1e-9 || (start.y - theta.tan()).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("partial trajectory must start at (1, tan theta), got {start:?}")));
    }
    Ok(average_cost_at_angles(traj, &midpoint_angles(2.0 * theta, TAU - 2.0 * theta, m), Boundary::Clockwise))
}

/// Whether every midpoint sample of the perimeter is eventually inspected.
pub fn is_inspective(traj: &Polyline, resolution: usize) -> bool {
    midpoint_angles(0.0, TAU, resolution.max(1))
        .par_iter()
        .all(|&phi| first_inspection_with(traj, PerimeterPoint::new(phi), Boundary::Closed).is_some())
}

/// The full trajectory of an inspection-feasible solution: the deployment
/// segment from the origin to `T(ξ)`, then the curve from `x = ξ` back to the
/// start, sampled at `segments` equispaced parameters.
pub fn assemble_trajectory(sol: &OdeSolution, xi: f64, segments: usize) -> Result<Polyline> {
    let x0 = sol.x_min();
    let segments = segments.max(1);
    let mut v = Vec::with_capacity(segments + 2);
    v.push(Point2::ORIGIN);
    for j in 0..=segments {
        let x = if j == segments { x0 } else { xi - (xi - x0) * j as f64 / segments as f64 };
        v.push(sol.curve_point(x)?);
    }
    Polyline::new(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_census() {
        let tr = Polyline::new(vec![Point2::ORIGIN, Point2::new(3.0, 0.0)]).unwrap();
        let r = average_cost_full(&tr, 10_000).unwrap();
        // only cos φ >= 1/3 is ever visible
        let visible = (1.0f64 / 3.0).acos() / PI;
        assert!((r.never_count as f64 / 1e4 - (1.0 - visible)).abs() < 1e-3);
        assert!(r.never_count as f64 > 0.5 * 1e4);
    }

    #[test]
    fn segment_is_not_inspective() {
        let tr = Polyline::new(vec![Point2::ORIGIN, Point2::new(2.0, 0.0)]).unwrap();
        assert!(!is_inspective(&tr, 1000));
    }

    #[test]
    fn rejects_off_origin_start() {
        let tr = Polyline::new(vec![Point2::new(0.5, 0.0), Point2::new(2.0, 0.0)]).unwrap();
        assert!(average_cost_full(&tr, 1000).is_err());
    }

    #[test]
    fn worst_case_constant() {
        assert!((WORST_CASE_OPTIMUM - 6.39724).abs() < 1e-5);
    }
}
