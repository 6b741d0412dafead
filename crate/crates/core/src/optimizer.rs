//! Minimization of the cost over the scalar initial condition.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::cost::{cost_gradient, total_cost, CostBreakdown};
use crate::error::{Error, Result};
use crate::feasibility::{assess_solution, deployment_parameter_at, sweep_grid, FeasibilityReport};
use crate::numeric::{bisect, golden_section};
use crate::ode::{integrate, OdeSolution};
use crate::pipeline::Config;

/// Window of initial conditions certified inspection-feasible.
pub const WINDOW: (f64, f64) = (1.64697, 1.6525);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerOptions {
    pub config: Config,
    pub grid: usize,
    pub golden_tol: f64,
    /// Bisection tolerance on ξ inside the objective. Much tighter than the
    /// reporting tolerance so that the objective is smooth at the scale the
    /// golden-section search resolves.
    pub xi_tol: f64,
    /// Finish with a root of the analytic gradient.
    pub polish: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { config: Config::default(), grid: 2000, golden_tol: 1e-9, xi_tol: 1e-14, polish: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostSample {
    pub tau0: f64,
    pub cost: Option<CostBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CostSample {
    pub fn total(&self) -> Option<f64> {
        self.cost.map(|c| c.total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalSolution {
    pub tau0_star: f64,
    pub xi_star: f64,
    pub theta_star: f64,
    pub cost_star: f64,
    pub clearance_star: f64,
    pub tau_min_star: f64,
    pub bracket: (f64, f64),
    pub grid_resolution: usize,
    /// Golden-section estimate before the gradient polish.
    pub tau0_golden: f64,
    pub cost_golden: f64,
    /// dC/dτ0 at `tau0_star`.
    pub gradient: f64,
    pub polished: bool,
    pub breakdown: CostBreakdown,
    pub certificate: FeasibilityReport,
}

fn solve(tau0: f64, opts: &OptimizerOptions) -> Result<(OdeSolution, f64)> {
    let sol = integrate(tau0, &opts.config.ode)?;
    let xi = deployment_parameter_at(&sol, opts.config.feasibility.grid, opts.xi_tol)?;
    Ok((sol, xi))
}

/// Cost breakdown of one initial condition.
pub fn cost_at(tau0: f64, opts: &OptimizerOptions) -> Result<CostBreakdown> {
    let (sol, xi) = solve(tau0, opts)?;
    total_cost(&sol, xi, &opts.config.quad)
}

/// dC/dτ0 at one initial condition.
pub fn gradient_at(tau0: f64, opts: &OptimizerOptions) -> Result<f64> {
    let (sol, xi) = solve(tau0, opts)?;
    cost_gradient(&sol, xi, &opts.config.quad)
}

/// Cost on `grid` equispaced points of `[lo, hi]`, in increasing `tau0`.
pub fn sweep_cost(lo: f64, hi: f64, grid: usize, opts: &OptimizerOptions) -> Result<Vec<CostSample>> {
    if !(lo < hi) || grid < 2 {
        return Err(Error::InvalidInput(format!("sweep needs lo < hi and grid >= 2 (got [{lo}, {hi}], {grid})")));
    }
    Ok(sweep_grid(lo, hi, grid)
        .into_par_iter()
        .map(|tau0| match cost_at(tau0, opts) {
            Ok(c) => CostSample { tau0, cost: Some(c), error: None },
            Err(e) => CostSample { tau0, cost: None, error: Some(e.kind().to_string()) },
        })
        .collect())
}

/// Sign changes in the successive differences of the successful samples.
pub fn sign_changes(samples: &[CostSample]) -> usize {
    let vals: Vec<f64> = samples.iter().filter_map(|s| s.total()).collect();
    let signs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).filter(|d| *d != 0.0).map(f64::signum).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Index of the smallest successful sample.
pub fn argmin(samples: &[CostSample]) -> Option<usize> {
    samples
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.total().map(|c| (i, c)))
        .fold(None, |best: Option<(usize, f64)>, (i, c)| match best {
            Some((_, b)) if b <= c => best,
            _ => Some((i, c)),
        })
        .map(|(i, _)| i)
}

/// Grid cells either side of the sweep minimum.
pub fn bracket_of(samples: &[CostSample]) -> Result<(f64, f64)> {
    let j = argmin(samples).ok_or(Error::NotUnimodal { sign_changes: 0 })?;
    let lo = samples[j.saturating_sub(1)].tau0;
    let hi = samples[(j + 1).min(samples.len() - 1)].tau0;
    Ok((lo, hi))
}

/// Successively zoomed sweeps: each level spans the two grid cells around
/// the previous level's minimum.
pub fn refined_sweeps(lo: f64, hi: f64, grid: usize, levels: usize, opts: &OptimizerOptions) -> Result<Vec<Vec<CostSample>>> {
    let mut out = Vec::with_capacity(levels);
    let (mut a, mut b) = (lo, hi);
    for _ in 0..levels.max(1) {
        let s = sweep_cost(a, b, grid, opts)?;
        let (na, nb) = bracket_of(&s)?;
        out.push(s);
        if !(na < nb) {
            break;
        }
        a = na;
        b = nb;
    }
    Ok(out)
}

/// Sweep, check unimodality, refine by golden section and polish with the
/// analytic gradient.
pub fn refine_minimum(lo: f64, hi: f64, opts: &OptimizerOptions) -> Result<OptimalSolution> {
    let samples = sweep_cost(lo, hi, opts.grid, opts)?;
    let changes = sign_changes(&samples);
    if changes > 1 {
        return Err(Error::NotUnimodal { sign_changes: changes });
    }
    let bracket = bracket_of(&samples)?;
    let g = golden_section(|t| cost_at(t, opts).map(|c| c.total).unwrap_or(f64::INFINITY), bracket.0, bracket.1, opts.golden_tol);
    let mut tau0_star = g.x;
    let mut polished = false;
    if opts.polish {
        let ga = gradient_at(bracket.0, opts);
        let gb = gradient_at(bracket.1, opts);
        if let (Ok(ga), Ok(gb)) = (ga, gb) {
            if ga < 0.0 && gb > 0.0 {
                let root = bisect(|t| gradient_at(t, opts).unwrap_or(f64::NAN), bracket.0, bracket.1, 0.0)?;
                let c_root = cost_at(root, opts)?.total;
                // Keep the polished point only if it is at least as good up
                // to the objective's own rounding.
                if c_root <= g.fx + 1e-12 {
                    tau0_star = root;
                    polished = true;
                }
            }
        }
    }
    let (sol, xi) = solve(tau0_star, opts)?;
    let breakdown = total_cost(&sol, xi, &opts.config.quad)?;
    let gradient = cost_gradient(&sol, xi, &opts.config.quad)?;
    let certificate = assess_solution(&sol, &opts.config.feasibility)?;
    Ok(OptimalSolution {
        tau0_star,
        xi_star: xi,
        theta_star: breakdown.theta,
        cost_star: breakdown.total,
        clearance_star: certificate.clearance,
        tau_min_star: certificate.tau_min,
        bracket,
        grid_resolution: opts.grid,
        tau0_golden: g.x,
        cost_golden: g.fx,
        gradient,
        polished,
        breakdown,
        certificate,
    })
}

pub fn write_sweep_csv<W: Write>(w: W, samples: &[CostSample]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["tau0", "xi", "theta", "log_term", "deployment_term", "integral", "total", "error"])?;
    for s in samples {
        let f = |v: f64| format!("{v:.17e}");
        match &s.cost {
            Some(c) => wr.write_record([
                f(s.tau0),
                f(c.xi),
                f(c.theta),
                f(c.log_term),
                f(c.deployment_term),
                f(c.inspection_integral),
                f(c.total),
                String::new(),
            ])?,
            None => {
                let nan = f(f64::NAN);
                wr.write_record([
                    f(s.tau0),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan,
                    s.error.clone().unwrap_or_default(),
                ])?
            }
        }
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(tau0: f64, total: f64) -> CostSample {
        let c = CostBreakdown { log_term: 0.0, deployment_term: 0.0, inspection_integral: total, total, xi: 0.8, theta: 0.6 };
        CostSample { tau0, cost: Some(c), error: None }
    }

    #[test]
    fn unimodality_guard() {
        let s: Vec<CostSample> = [3.0, 2.0, 1.0, 2.0].iter().enumerate().map(|(i, &c)| sample(i as f64, c)).collect();
        assert_eq!(sign_changes(&s), 1);
        assert_eq!(bracket_of(&s).unwrap(), (1.0, 3.0));
        let s: Vec<CostSample> =
            [3.0, 1.0, 2.0, 0.5, 2.0].iter().enumerate().map(|(i, &c)| sample(i as f64, c)).collect();
        assert_eq!(sign_changes(&s), 3);
    }

    #[test]
    fn bracket_at_edge() {
        let s: Vec<CostSample> = [1.0, 2.0, 3.0].iter().enumerate().map(|(i, &c)| sample(i as f64, c)).collect();
        assert_eq!(bracket_of(&s).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn two_point_sweep() {
        let s = sweep_cost(WINDOW.0, WINDOW.1, 2, &OptimizerOptions::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].tau0, WINDOW.0);
        assert_eq!(s[1].tau0, WINDOW.1);
        assert!(s.iter().all(|x| x.cost.is_some()));
    }
}
