//! Published values and oracle comparisons for each module, at the optimum and
//! across the certified window.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use crate::bounds::{self, NlpOptions};
use crate::convergence::continuum_errors;
use crate::cost::{self, QuadOptions};
use crate::feasibility::{self, FeasibilityOptions, FeasibilityReport};
use crate::fermat::{discrete_cost, shoot_theta, Weights};
use crate::geometry::{Boundary, Polyline};
use crate::ode::{self, OdeOptions, OdeSolution};
use crate::optimizer::{self, OptimalSolution, OptimizerOptions, WINDOW};
use crate::oracle;

const TAU0: f64 = 1.6469768608776936;
const COST: f64 = 3.5492595860809693;

fn optimum() -> &'static OptimalSolution {
    static CELL: OnceLock<OptimalSolution> = OnceLock::new();
    CELL.get_or_init(|| optimizer::refine_minimum(WINDOW.0, WINDOW.1, &OptimizerOptions::default()).unwrap())
}

fn window_sweep() -> &'static Vec<FeasibilityReport> {
    static CELL: OnceLock<Vec<FeasibilityReport>> = OnceLock::new();
    CELL.get_or_init(|| {
        feasibility::feasibility_sweep(WINDOW.0, WINDOW.1, 2000, &OdeOptions::default(), &FeasibilityOptions::default())
            .unwrap()
    })
}

fn solution(tau0: f64) -> OdeSolution {
    ode::integrate(tau0, &OdeOptions::default()).unwrap()
}

fn xi_of(sol: &OdeSolution) -> f64 {
    feasibility::deployment_parameter(sol, &FeasibilityOptions::default()).unwrap().0
}

#[test]
fn clearance_at_the_published_start() {
    let r = feasibility::assess(TAU0, &OdeOptions::default(), &FeasibilityOptions::default()).unwrap();
    assert!(r.feasible);
    assert!((r.tau_min - 0.24774522).abs() <= 1e-4, "{}", r.tau_min);
    assert!((r.clearance - 0.0302318).abs() <= 1e-4, "{}", r.clearance);
    assert!((feasibility::clearance(0.2) - 0.019803902718557).abs() <= 1e-12);
}

#[test]
fn curve_returns_to_the_deployment_line() {
    let sol = solution(TAU0);
    let xi = xi_of(&sol);
    assert!((sol.curve_point(xi).unwrap().x - 1.0).abs() <= 1e-7);
    let s = sol.state(1e-4).unwrap();
    assert!((s.psi - (FRAC_PI_2 - PI * 1e-4)).abs() <= 1e-6);
}

#[test]
fn two_starts_agree() {
    for tau0 in [1.647, 1.6525] {
        let gap = ode::self_check_init(tau0, 1e-6, 1e-7, &OdeOptions::default()).unwrap();
        assert!(gap <= 1e-9, "tau0 = {tau0}: {gap}");
    }
}

#[test]
fn window_endpoint_angles() {
    let at = |tau0: f64| feasibility::assess(tau0, &OdeOptions::default(), &FeasibilityOptions::default()).unwrap();
    assert!((at(1.64697).theta - 0.501177).abs() <= 1e-5);
    assert!((at(1.6525).theta - 1.1600947).abs() <= 1e-5);
}

#[test]
fn window_sweep_certificate() {
    let rows = window_sweep();
    assert_eq!(rows.len(), 2000);
    assert!(rows.iter().all(|r| r.feasible && r.error.is_none()));
    let tau_min = rows.iter().map(|r| r.tau_min).fold(f64::INFINITY, f64::min);
    assert!(tau_min >= 0.2, "{tau_min}");
    let lo = rows.iter().map(|r| r.theta).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.theta).fold(f64::NEG_INFINITY, f64::max);
    assert!(lo <= bounds::THETA_LO && hi >= bounds::THETA_HI);
    assert!(rows.iter().all(|r| r.xi > 0.5 && r.xi <= 1.0 && r.xi_selfcheck_gap <= 2e-8));
    assert!(rows.windows(2).all(|w| w[1].xi < w[0].xi), "xi is not monotone over the sweep");
}

#[test]
fn integral_derivative_matches_differences() {
    let q = QuadOptions::default();
    for tau0 in [TAU0, 1.648, 1.65, 1.6525] {
        let sol = solution(tau0);
        let xi = xi_of(&sol);
        let h = 1e-5;
        let fd = (cost::inspection_integral(&sol, xi + h, &q).unwrap() - cost::inspection_integral(&sol, xi - h, &q).unwrap())
            / (2.0 * h);
        let exact = cost::inspection_integrand(&sol, xi).unwrap();
        assert!(((fd - exact) / exact).abs() <= 1e-6, "tau0 = {tau0}: {fd} vs {exact}");
    }
}

#[test]
fn cost_at_the_published_start() {
    let q = QuadOptions::default();
    let sol = solution(TAU0);
    let xi = xi_of(&sol);
    let c = cost::total_cost(&sol, xi, &q).unwrap();
    assert!((c.total - COST).abs() <= 1e-6, "{}", c.total);
    let s = cost::partial_cost(&sol, xi, &q).unwrap();
    assert!((cost::b_theta(c.theta, s) - c.total).abs() <= 1e-10);
    let edge = solution(1.6525);
    let far = cost::total_cost(&edge, xi_of(&edge), &q).unwrap();
    assert!(far.total > 3.5493);
}

#[test]
fn optimizer_reproduces_the_optimum() {
    let o = optimum();
    assert!((o.tau0_star - TAU0).abs() <= 1e-6);
    assert!((o.cost_star - COST).abs() <= 1e-6, "{}", o.cost_star);
    assert!((o.xi_star - 0.8119098734258519).abs() <= 1e-6);
    assert!((o.clearance_star - 0.0302318).abs() <= 1e-4);
    assert!(o.bracket.0 <= o.tau0_star && o.tau0_star <= o.bracket.1);
    assert!(o.theta_star > bounds::THETA_LO && o.theta_star < bounds::THETA_HI);
    assert!(o.certificate.feasible);
}

#[test]
fn optimum_is_flat_and_below_the_sweep() {
    let o = optimum();
    let opts = OptimizerOptions::default();
    let c = |t: f64| optimizer::cost_at(t, &opts).unwrap().total;
    assert!(o.gradient.abs() <= 1e-4, "{}", o.gradient);
    assert!(o.cost_star <= c(o.bracket.0) && o.cost_star <= c(o.bracket.1));
    let sweep = optimizer::sweep_cost(WINDOW.0, WINDOW.1, 2000, &opts).unwrap();
    let best = sweep.iter().filter_map(|s| s.total()).fold(f64::INFINITY, f64::min);
    assert!(o.cost_star <= best);
    assert_eq!(optimizer::sign_changes(&sweep), 1);
}

#[test]
fn angle_window_bounds() {
    assert!((bounds::h_lower(1.148) - 3.55348).abs() <= 1e-4);
    let n = 500;
    let top = FRAC_PI_2 - 1e-3;
    for j in 0..n {
        let th = 1.148 + (top - 1.148) * j as f64 / n as f64;
        assert!(bounds::h_prime(th) > 0.0, "h' <= 0 at {th}");
    }
    let w = bounds::theta_window(1000, &NlpOptions::default()).unwrap();
    assert_eq!((w.theta_lo, w.theta_hi), (0.52, 1.148));
    assert!((w.nlp_at_lo - 3.5512215).abs() <= 1e-3);
    assert!(w.margins.lo >= 2e-4 && (w.margins.lo - 3.2e-4).abs() <= 5e-5);
    assert!((w.margins.hi - 0.00258).abs() <= 1e-4);
}

#[test]
fn composed_bound_decreases_below_the_window() {
    let rows: Vec<_> = bounds::nlp_sweep(0.0, 0.52, 101, 1000, &NlpOptions::default())
        .into_iter()
        .collect::<Result<_, _>>()
        .unwrap();
    assert!(rows.iter().all(|r| r.composed_bound > 3.551 && r.kkt_residual <= 1e-8));
    assert!(rows.windows(2).all(|w| w[1].composed_bound < w[0].composed_bound));
    let coarse = bounds::nlp_lower_bound(0.52, 500, &NlpOptions::default()).unwrap();
    assert!((coarse.composed_bound - rows.last().unwrap().composed_bound).abs() <= 5e-3);
}

#[test]
fn oracle_on_the_assembled_optimum() {
    let sol = solution(TAU0);
    let xi = feasibility::deployment_parameter_at(&sol, 10_000, 1e-14).unwrap();
    let traj = oracle::assemble_trajectory(&sol, xi, 10_000).unwrap();
    let m = 100_000;
    let r = oracle::average_cost_full(&traj, m).unwrap();
    assert_eq!(r.never_count, 0);
    assert!((r.mean_cost - 3.5492596).abs() <= 2e-3, "{}", r.mean_cost);
    assert!(r.max_cost >= oracle::WORST_CASE_OPTIMUM - 1e-6);
    let r2 = oracle::average_cost_full(&traj, 2 * m).unwrap();
    assert!((r.mean_cost - r2.mean_cost).abs() <= 10.0 / m as f64);
    assert!(oracle::is_inspective(&traj, m));
}

#[test]
fn oracle_on_a_discrete_chain() {
    let (theta, k) = (0.6, 500);
    let ch = shoot_theta(theta, k).unwrap();
    let upper = discrete_cost(&ch, Weights::Upper);
    let pl = Polyline::new(ch.traversal()).unwrap();
    let angles: Vec<f64> = (0..=k).map(|i| ch.phi(i)).collect();
    let exact = oracle::average_cost_at_angles(&pl, &angles, Boundary::Clockwise);
    assert!((exact.mean_cost - upper).abs() <= 1e-9);
    let sampled = oracle::average_cost_partial(&pl, theta, 100_000).unwrap();
    assert!((sampled.mean_cost - upper).abs() <= 1.0 / k as f64);
}

#[test]
fn recursion_tracks_the_continuum_at_high_resolution() {
    let sol = solution(TAU0);
    let (e_psi, e_tau) = continuum_errors(&sol, 1_000_000, 0.4, 0.4).unwrap();
    assert!(e_psi <= 5e-5 && e_tau <= 5e-5, "{e_psi} {e_tau}");
}
