//! Deployment parameter ξ(τ0), deployment angle θ and the clearance
//! certificate of the inspection curve.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{bisect, brent_minimize};
use crate::ode::{integrate, OdeOptions, OdeSolution};

/// Threshold on `τ_min` for declaring a curve clear of the disk.
pub const FEASIBLE_TAU_MIN: f64 = 1e-6;

/// The crossing scan needs `g < −LEFT_MARGIN` on the left of a bracket so that
/// the trivial root at `x0` is never taken.
pub const LEFT_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityOptions {
    pub grid: usize,
    pub tol_bisect: f64,
    pub tol_recheck: f64,
    pub tol_brent: f64,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        Self { grid: 10_000, tol_bisect: 1e-8, tol_recheck: 5e-10, tol_brent: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub tau0: f64,
    pub xi: f64,
    pub theta: f64,
    pub tau_min: f64,
    pub clearance: f64,
    pub feasible: bool,
    pub xi_selfcheck_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl FeasibilityReport {
    fn failed(tau0: f64, err: &Error) -> Self {
        Self {
            tau0,
            xi: f64::NAN,
            theta: f64::NAN,
            tau_min: f64::NAN,
            clearance: f64::NAN,
            feasible: false,
            xi_selfcheck_gap: f64::NAN,
            error: Some(err.kind().to_string()),
        }
    }
}

/// `θ = (1 − ξ)π`.
pub fn deployment_angle(xi: f64) -> f64 {
    (1.0 - xi) * PI
}

/// Radial distance `√(1 + τ²) − 1` of a point with tangent offset `τ`.
pub fn clearance(tau_min: f64) -> f64 {
    let t2 = tau_min * tau_min;
    t2 / ((1.0 + t2).sqrt() + 1.0)
}

/// Bracket `[a, b]` around the first crossing of `T₁ = 1` beyond the start.
fn crossing_bracket(sol: &OdeSolution, grid: usize) -> Result<(f64, f64)> {
    let grid = grid.max(2);
    let (x0, x1) = (sol.x_min(), sol.x_max().min(1.0));
    let at = |j: usize| x0 + (x1 - x0) * j as f64 / grid as f64;
    let mut g_prev = sol.crossing_function(x0).0;
    // The last cell ends on the trivial root at x = 1 and is skipped.
    for j in 1..grid {
        let x = at(j);
        let g = sol.crossing_function(x).0;
        if g_prev < -LEFT_MARGIN && g >= 0.0 {
            return Ok((at(j - 1), x));
        }
        g_prev = g;
    }
    Err(Error::NoCrossing { tau0: sol.tau0 })
}

/// Smallest root of `T₁(x) = 1` beyond the start, bisected to `tol`.
pub fn deployment_parameter_at(sol: &OdeSolution, grid: usize, tol: f64) -> Result<f64> {
    let (a, b) = crossing_bracket(sol, grid)?;
    bisect(|x| sol.crossing_function(x).0, a, b, tol)
}

/// Deployment parameter at `tol_bisect`, with the gap to a rerun at
/// `tol_recheck`.
pub fn deployment_parameter(sol: &OdeSolution, opts: &FeasibilityOptions) -> Result<(f64, f64)> {
    let (a, b) = crossing_bracket(sol, opts.grid)?;
    let g = |x: f64| sol.crossing_function(x).0;
    let xi = bisect(g, a, b, opts.tol_bisect)?;
    let xi_fine = bisect(g, a, b, opts.tol_recheck)?;
    Ok((xi, (xi - xi_fine).abs()))
}

/// Minimum of τ on `[x0, ξ]` and the corresponding clearance.
///
/// A coarse scan picks the cell of the smallest sample and Brent's method
/// refines inside the neighbouring cells.
pub fn clearance_certificate(sol: &OdeSolution, xi: f64, tol_brent: f64) -> Result<(f64, f64)> {
    let x0 = sol.x_min();
    if !(xi > x0 && xi <= sol.x_max()) {
        return Err(Error::OutOfRange { x: xi, lo: x0, hi: sol.x_max() });
    }
    const CELLS: usize = 1000;
    let at = |j: usize| if j == CELLS { xi } else { x0 + (xi - x0) * j as f64 / CELLS as f64 };
    let tau = |x: f64| sol.state_unchecked(x).tau;
    let (mut best_j, mut best) = (0, f64::INFINITY);
    for j in 0..=CELLS {
        let v = tau(at(j));
        if v < best {
            best = v;
            best_j = j;
        }
    }
    let lo = at(best_j.saturating_sub(1));
    let hi = at((best_j + 1).min(CELLS));
    let m = brent_minimize(tau, lo, hi, tol_brent, 500);
    let tau_min = m.fx.min(best);
    Ok((tau_min, clearance(tau_min)))
}

/// Full feasibility assessment of an already integrated solution.
pub fn assess_solution(sol: &OdeSolution, opts: &FeasibilityOptions) -> Result<FeasibilityReport> {
    let (xi, gap) = deployment_parameter(sol, opts)?;
    let (tau_min, clr) = clearance_certificate(sol, xi, opts.tol_brent)?;
    Ok(FeasibilityReport {
        tau0: sol.tau0,
        xi,
        theta: deployment_angle(xi),
        tau_min,
        clearance: clr,
        feasible: tau_min > FEASIBLE_TAU_MIN,
        xi_selfcheck_gap: gap,
        error: None,
    })
}

/// Integrate and assess one initial condition.
pub fn assess(tau0: f64, ode: &OdeOptions, opts: &FeasibilityOptions) -> Result<FeasibilityReport> {
    let sol = integrate(tau0, ode)?;
    assess_solution(&sol, opts)
}

/// `grid` equispaced initial conditions on `[lo, hi]`, both ends included.
pub fn sweep_grid(lo: f64, hi: f64, grid: usize) -> Vec<f64> {
    let n = grid.max(2) - 1;
    (0..=n).map(|j| if j == n { hi } else { lo + (hi - lo) * j as f64 / n as f64 }).collect()
}

/// Assess every grid point; failures are recorded in the report.
pub fn feasibility_sweep(
    lo: f64,
    hi: f64,
    grid: usize,
    ode: &OdeOptions,
    opts: &FeasibilityOptions,
) -> Result<Vec<FeasibilityReport>> {
    if !(lo < hi) || grid < 2 {
        return Err(Error::InvalidInput(format!("sweep needs lo < hi and grid >= 2 (got [{lo}, {hi}], {grid})")));
    }
    Ok(sweep_grid(lo, hi, grid)
        .into_par_iter()
        .map(|t| assess(t, ode, opts).unwrap_or_else(|e| FeasibilityReport::failed(t, &e)))
        .collect())
}

pub fn write_sweep_csv<W: Write>(w: W, reports: &[FeasibilityReport]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["tau0", "xi", "theta", "tau_min", "clearance", "feasible", "selfcheck_gap"])?;
    for r in reports {
        wr.write_record([
            format!("{:.17e}", r.tau0),
            format!("{:.17e}", r.xi),
            format!("{:.17e}", r.theta),
            format!("{:.17e}", r.tau_min),
            format!("{:.17e}", r.clearance),
            r.feasible.to_string(),
            format!("{:.17e}", r.xi_selfcheck_gap),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clearance_values() {
        assert_eq!(clearance(0.0), 0.0);
        assert!((clearance(0.2) - ((1.04f64).sqrt() - 1.0)).abs() < 1e-15);
        assert!((clearance(0.2) - 0.019_803_902_718_557).abs() < 1e-12);
    }

    #[test]
    fn sweep_grid_endpoints() {
        let g = sweep_grid(1.0, 2.0, 2);
        assert_eq!(g, vec![1.0, 2.0]);
        assert_eq!(sweep_grid(0.0, 1.0, 5).len(), 5);
    }

    #[test]
    fn infeasible_start_has_no_crossing() {
        let e = assess(1.64, &OdeOptions::default(), &FeasibilityOptions::default()).unwrap_err();
        assert_eq!(e.kind(), "NoCrossing");
    }

    #[test]
    fn failed_points_stay_in_sweep() {
        let r = feasibility_sweep(1.64, 1.6470, 2, &OdeOptions::default(), &FeasibilityOptions::default()).unwrap();
        assert_eq!(r.len(), 2);
        assert!(!r[0].feasible);
        assert_eq!(r[0].error.as_deref(), Some("NoCrossing"));
        assert!(r[1].feasible);
    }
}
