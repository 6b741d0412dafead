//! The three-term cost of an inspection-feasible initial condition and the
//! composition map `B_θ`.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasibility::deployment_angle;
use crate::numeric::gauss_kronrod;
use crate::ode::OdeSolution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadOptions {
    pub rtol: f64,
    pub atol: f64,
    pub limit: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, limit: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub log_term: f64,
    pub deployment_term: f64,
    pub inspection_integral: f64,
    pub total: f64,
    pub xi: f64,
    pub theta: f64,
}

/// `(1/2π) log((1 + sin ξπ)/(1 − sin ξπ))`.
pub fn log_term(xi: f64) -> f64 {
    let s = (xi * PI).sin();
    ((1.0 + s) / (1.0 - s)).ln() / TAU
}

/// `ξ / cos((1 − ξ)π)`, the length of the deployment segment weighted by ξ.
pub fn deployment_term(xi: f64) -> f64 {
    xi / ((1.0 - xi) * PI).cos()
}

/// `B_θ(s) = (1/2π) log((1+sin θ)/(1−sin θ)) + (1 − θ/π)(1/cos θ + s)`.
pub fn b_theta(theta: f64, s: f64) -> f64 {
    let sn = theta.sin();
    ((1.0 + sn) / (1.0 - sn)).ln() / TAU + (1.0 - theta / PI) * (1.0 / theta.cos() + s)
}

fn check_xi(sol: &OdeSolution, xi: f64) -> Result<()> {
    if xi < 0.0 || xi > sol.x_max() {
        return Err(Error::OutOfRange { x: xi, lo: 0.0, hi: sol.x_max() });
    }
    Ok(())
}

fn integrate_on(sol: &OdeSolution, xi: f64, q: &QuadOptions, f: impl Fn(f64) -> f64) -> Result<f64> {
    check_xi(sol, xi)?;
    let x0 = sol.x_min();
    if xi <= x0 {
        return Ok(0.0);
    }
    Ok(gauss_kronrod(f, x0, xi, q.rtol, q.atol, q.limit)?.value)
}

/// `I(ξ) = 2π ∫₀^ξ x τ(x)/sin ψ(x) dx`, with the integrand taken as zero on
/// `[0, x0]`.
pub fn inspection_integral(sol: &OdeSolution, xi: f64, q: &QuadOptions) -> Result<f64> {
    integrate_on(sol, xi, q, |x| {
        let s = sol.state_unchecked(x);
        TAU * x * s.tau / s.psi.sin()
    })
}

/// `I'(ξ) = 2πξ τ(ξ)/sin ψ(ξ)`.
pub fn inspection_integrand(sol: &OdeSolution, x: f64) -> Result<f64> {
    let s = sol.state(x)?;
    Ok(TAU * x * s.tau / s.psi.sin())
}

/// `s = I(ξ)/ξ`, the average cost of the partial problem.
pub fn partial_cost(sol: &OdeSolution, xi: f64, q: &QuadOptions) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::InvalidInput(format!("partial cost needs xi > 0, got {xi}")));
    }
    Ok(inspection_integral(sol, xi, q)? / xi)
}

pub fn total_cost(sol: &OdeSolution, xi: f64, q: &QuadOptions) -> Result<CostBreakdown> {
    let integral = inspection_integral(sol, xi, q)?;
    let lt = log_term(xi);
    let dt = deployment_term(xi);
    Ok(CostBreakdown {
        log_term: lt,
        deployment_term: dt,
        inspection_integral: integral,
        total: lt + dt + integral,
        xi,
        theta: deployment_angle(xi),
    })
}

/// Derivative of the cost with respect to the initial condition, through the
/// implicit dependence of ξ on τ0:
///
/// `dC/dτ0 = (F'(ξ) + I'(ξ)) ξ'(τ0) + 2π ∫ x ∂τ/∂τ0 / sin ψ dx`,
///
/// where `F` is the sum of the two closed-form terms,
/// `F'(ξ) = −πξ sin πξ / cos² πξ`, and `ξ' = S sin 2πξ / T₁'(ξ)`.
pub fn cost_gradient(sol: &OdeSolution, xi: f64, q: &QuadOptions) -> Result<f64> {
    check_xi(sol, xi)?;
    let st = sol.state(xi)?;
    let (sn, cs) = (PI * xi).sin_cos();
    let f_prime = -PI * xi * sn / (cs * cs);
    let i_prime = TAU * xi * st.tau / st.psi.sin();
    let (_, dg) = sol.crossing_function(xi);
    let dxi = st.sens * (TAU * xi).sin() / dg;
    let js = integrate_on(sol, xi, q, |x| {
        let s = sol.state_unchecked(x);
        TAU * x * s.sens / s.psi.sin()
    })?;
    Ok((f_prime + i_prime) * dxi + js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_theta_at_zero() {
        for s in [0.0, 0.5, 2.0] {
            assert!((b_theta(0.0, s) - (1.0 + s)).abs() < 1e-15);
        }
    }

    #[test]
    fn b_theta_increasing_in_s() {
        for th in [0.1, 0.6, 1.2] {
            assert!(b_theta(th, 1.0) > b_theta(th, 0.9));
        }
    }

    #[test]
    fn log_term_formula() {
        let s = (0.9 * PI).sin();
        assert!((log_term(0.9) - ((1.0 + s) / (1.0 - s)).ln() / TAU).abs() < 1e-15);
        assert!(log_term(0.5 + 1e-9) > 5.0);
    }

    #[test]
    fn terms_match_b_theta() {
        for xi in [0.6, 0.75, 0.81, 0.95] {
            let th = deployment_angle(xi);
            let s = 1.3;
            let lhs = log_term(xi) + deployment_term(xi) + xi * s;
            assert!((lhs - b_theta(th, s)).abs() < 1e-12, "{xi}");
        }
    }
}
