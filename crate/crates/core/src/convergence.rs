//! Distance between the discrete recursion and its continuum limit.

use serde::Serialize;

use crate::error::Result;
use crate::fermat::forward_recursion;
use crate::ode::{integrate, origin_value, Anchor, OdeOptions, OdeSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub sup_psi: f64,
    pub sup_tau: f64,
    /// Ratio to the previous row of the table, if any.
    pub ratio_psi: Option<f64>,
    pub ratio_tau: Option<f64>,
}

/// Sup-distances over the recursion nodes `x = i/n` in `[lo, hi]` between
/// `(y_i, t_i)` and `(ψ, τ)`. The recursion starts from the continuum value
/// of τ at the origin.
pub fn continuum_errors(sol: &OdeSolution, n: usize, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let c = origin_value(sol.tau0, sol.options.anchor);
    let m = ((hi * n as f64).ceil() as usize).min(n);
    let tr = forward_recursion(c, n, m)?;
    let ys = tr.angles();
    let ts = tr.offsets();
    let (mut ep, mut et) = (0.0_f64, 0.0_f64);
    for i in 0..=m {
        let x = i as f64 / n as f64;
        if x < lo || x > hi {
            continue;
        }
        let s = sol.state(x)?;
        ep = ep.max((ys[i] - s.psi).abs());
        et = et.max((ts[i] - s.tau).abs());
    }
    Ok((ep, et))
}

/// Rate table for successive resolutions.
pub fn rate_table(tau0: f64, ns: &[usize], lo: f64, hi: f64) -> Result<Vec<ConvergenceRow>> {
    let c = origin_value(tau0, Anchor::Reference);
    let sol = integrate(c, &OdeOptions { x0: 1e-7, anchor: Anchor::Origin, ..OdeOptions::default() })?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        let (sup_psi, sup_tau) = continuum_errors(&sol, n, lo, hi)?;
        let (ratio_psi, ratio_tau) = match rows.last() {
            Some(p) => (Some(p.sup_psi / sup_psi), Some(p.sup_tau / sup_tau)),
            None => (None, None),
        };
        rows.push(ConvergenceRow { n, sup_psi, sup_tau, ratio_psi, ratio_tau });
    }
    Ok(rows)
}
