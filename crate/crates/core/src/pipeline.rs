//! One initial condition through integration, feasibility and cost.

use serde::Serialize;

use crate::cost::{total_cost, CostBreakdown, QuadOptions};
use crate::error::Result;
use crate::feasibility::{assess_solution, FeasibilityOptions, FeasibilityReport};
use crate::ode::{integrate, OdeOptions, OdeSolution};

/// Numerical settings shared by every stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Config {
    pub ode: OdeOptions,
    pub feasibility: FeasibilityOptions,
    pub quad: QuadOptions,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub solution: OdeSolution,
    pub report: FeasibilityReport,
    pub cost: CostBreakdown,
}

/// Integrate `tau0`, certify it and price it at the reported ξ.
pub fn evaluate(tau0: f64, cfg: &Config) -> Result<Evaluation> {
    let solution = integrate(tau0, &cfg.ode)?;
    let report = assess_solution(&solution, &cfg.feasibility)?;
    let cost = total_cost(&solution, report.xi, &cfg.quad)?;
    Ok(Evaluation { solution, report, cost })
}
