//! Lower bounds that confine the deployment angle: the closed-form bound
//! `h(θ)` for steep angles and the convex chain-length program for shallow
//! ones, both composed through `B_θ`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::cost::b_theta;
use crate::error::{Error, Result};
use crate::fermat::{backward_chain, theta_alpha};
use crate::geometry::{tangent_point, Point2};

/// Best previously known upper bound on the optimal average cost.
pub const PRIOR_UPPER_BOUND: f64 = 3.5509015;
pub const THETA_LO: f64 = 0.52;
pub const THETA_HI: f64 = 1.148;

/// `h(θ)`, a lower bound on the cost of any trajectory deploying at angle θ.
pub fn h_lower(theta: f64) -> f64 {
    let s = theta.sin();
    ((1.0 + s) / (1.0 - s)).ln() / TAU
        + (1.0 - theta / PI) * (1.0 / theta.cos() + PI * (theta.tan() + PI - 2.0 * theta + 3.0) / (4.0 * (PI - theta)))
}

/// `h'(θ) = (tan²θ − 1)/4 + (π − θ) tan θ sec θ / π`.
pub fn h_prime(theta: f64) -> f64 {
    let t = theta.tan();
    0.25 * (t * t - 1.0) + (PI - theta) * t / theta.cos() / PI
}

/// Weight of segment `i` in the relaxed program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerWeights {
    /// `(i − 1)/(k + 1)`.
    #[default]
    KPlusOne,
    /// `(i − 1)/k`.
    K,
}

impl LowerWeights {
    fn weight(self, i: usize, k: usize) -> f64 {
        let d = match self {
            LowerWeights::KPlusOne => k as f64 + 1.0,
            LowerWeights::K => k as f64,
        };
        (i as f64 - 1.0) / d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NlpOptions {
    pub weights: LowerWeights,
    pub tol_kkt: f64,
    pub tol_objective: f64,
    pub max_iter: usize,
}

impl Default for NlpOptions {
    fn default() -> Self {
        Self { weights: LowerWeights::KPlusOne, tol_kkt: 1e-10, tol_objective: 1e-9, max_iter: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NlpSolution {
    pub theta: f64,
    pub k: usize,
    pub t: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub composed_bound: f64,
    pub iterations: usize,
}

/// The relaxed chain program for fixed `(θ, k)`.
#[derive(Debug, Clone)]
pub struct ChainProgram {
    pub theta: f64,
    pub k: usize,
    base: Vec<Point2>,
    dir: Vec<Point2>,
    w: Vec<f64>,
}

struct Local {
    f: f64,
    g: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl ChainProgram {
    pub fn new(theta: f64, k: usize, weights: LowerWeights) -> Self {
        let alpha = theta_alpha(theta, k);
        let mut base = Vec::with_capacity(k + 1);
        let mut dir = Vec::with_capacity(k + 1);
        for i in 0..=k {
            let phi = TAU - alpha * i as f64;
            base.push(tangent_point(phi, 0.0));
            let (s, c) = phi.sin_cos();
            dir.push(Point2::new(s, -c));
        }
        let w = (0..=k).map(|i| if i == 0 { 0.0 } else { weights.weight(i, k) }).collect();
        Self { theta, k, base, dir, w }
    }

    fn point(&self, i: usize, t: f64) -> Point2 {
        Point2::new(self.base[i].x + t * self.dir[i].x, self.base[i].y + t * self.dir[i].y)
    }

    /// `Σ w_i ‖A_i − A_{i−1}‖` for offsets `t_0..t_k`.
    pub fn objective(&self, t: &[f64]) -> f64 {
        (1..=self.k).map(|i| self.w[i] * self.point(i, t[i]).dist(self.point(i - 1, t[i - 1]))).sum()
    }

    /// Gradient with respect to all offsets.
    pub fn gradient(&self, t: &[f64]) -> Vec<f64> {
        self.local(t).g
    }

    fn local(&self, t: &[f64]) -> Local {
        let k = self.k;
        let mut f = 0.0;
        let mut g = vec![0.0; k + 1];
        let mut diag = vec![0.0; k + 1];
        let mut off = vec![0.0; k + 1];
        for i in 1..=k {
            let w = self.w[i];
            if w == 0.0 {
                continue;
            }
            let dv = self.point(i, t[i]).sub(self.point(i - 1, t[i - 1]));
            let d = dv.norm();
            f += w * d;
            if d == 0.0 {
                continue;
            }
            let u = Point2::new(dv.x / d, dv.y / d);
            let (ea, eb) = (self.dir[i], self.dir[i - 1]);
            let (ua, ub) = (u.dot(ea), u.dot(eb));
            g[i] += w * ua;
            g[i - 1] -= w * ub;
            let s = w / d;
            diag[i] += s * (ea.dot(ea) - ua * ua);
            diag[i - 1] += s * (eb.dot(eb) - ub * ub);
            off[i] -= s * (ea.dot(eb) - ua * ub);
        }
        Local { f, g, diag, off }
    }

    /// Largest entry of `t − P(t − ∇f)` over the free offsets.
    pub fn kkt_residual(&self, t: &[f64]) -> f64 {
        let g = self.gradient(t);
        (1..self.k).map(|i| (t[i] - (t[i] - g[i]).max(0.0)).abs()).fold(0.0, f64::max)
    }
}

/// Solve a symmetric tridiagonal system; `off[i]` couples rows `i−1` and `i`.
/// Returns `None` if a pivot is not positive.
fn thomas(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if !(piv > 0.0) {
        return None;
    }
    c[0] = if n > 1 { off[1] / piv } else { 0.0 };
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - off[i] * c[i - 1];
        if !(piv > 0.0) {
            return None;
        }
        c[i] = if i + 1 < n { off[i + 1] / piv } else { 0.0 };
        d[i] = (rhs[i] - off[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

fn starting_point(theta: f64, k: usize) -> Vec<f64> {
    match backward_chain(theta, k) {
        Ok(tr) => tr.offsets(),
        Err(_) => {
            let mut t = vec![theta.tan().max(0.5); k + 1];
            t[k] = theta.tan();
            t
        }
    }
}

/// Minimize the relaxed program over `t_0..t_{k−1} ≥ 0` with `t_k = tan θ`.
///
/// Projected Newton on the tridiagonal Hessian with an Armijo search along
/// the projection arc. Offsets sitting on the bound with a positive gradient
/// are frozen for the step. `t_0` carries no weight and is set afterwards to
/// the foot of `A_1` on the first tangent line.
pub fn nlp_lower_bound(theta: f64, k: usize, opts: &NlpOptions) -> Result<NlpSolution> {
    if !(0.0..PI / 2.0).contains(&theta) {
        return Err(Error::InvalidInput(format!("theta must lie in [0, pi/2), got {theta}")));
    }
    if k < 5 {
        return Err(Error::InvalidInput(format!("k must be at least 5, got {k}")));
    }
    let prog = ChainProgram::new(theta, k, opts.weights);
    let mut t = starting_point(theta, k);
    t[k] = theta.tan();
    for v in t.iter_mut().take(k) {
        *v = v.max(0.0);
    }
    let free = 1..k;
    let n = k - 1;
    let mut f_prev = f64::INFINITY;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut loc = prog.local(&t);
    while iterations < opts.max_iter {
        residual = (1..k).map(|i| (t[i] - (t[i] - loc.g[i]).max(0.0)).abs()).fold(0.0, f64::max);
        if residual <= opts.tol_kkt && (f_prev - loc.f).abs() <= opts.tol_objective {
            break;
        }
        iterations += 1;
        let eps_active = residual.min(1e-12);
        let active: Vec<bool> = free.clone().map(|i| t[i] <= eps_active && loc.g[i] > 0.0).collect();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for j in 0..n {
            let i = j + 1;
            if active[j] {
                diag[j] = 1.0;
                rhs[j] = 0.0;
            } else {
                diag[j] = loc.diag[i];
                rhs[j] = -loc.g[i];
                if j > 0 && !active[j - 1] {
                    off[j] = loc.off[i];
                }
            }
        }
        let scale = diag.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        let mut mu = 1e-14 * scale;
        let p = loop {
            let shifted: Vec<f64> = diag.iter().map(|d| d + mu).collect();
            if let Some(p) = thomas(&shifted, &off, &rhs) {
                break p;
            }
            mu *= 100.0;
            if mu > 1e6 * scale {
                break rhs.clone();
            }
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = t.clone();
            for j in 0..n {
                trial[j + 1] = (t[j + 1] + lambda * p[j]).max(0.0);
            }
            let f_trial = prog.objective(&trial);
            let decrease: f64 = (1..k).map(|i| loc.g[i] * (trial[i] - t[i])).sum();
            if f_trial <= loc.f + 1e-4 * decrease.min(0.0) && f_trial <= loc.f {
                accepted = Some(trial);
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some(trial) => {
                f_prev = loc.f;
                t = trial;
                loc = prog.local(&t);
            }
            None => {
                // No further decrease representable; the iterate is as good as
                // rounding allows.
                residual = (1..k).map(|i| (t[i] - (t[i] - loc.g[i]).max(0.0)).abs()).fold(0.0, f64::max);
                break;
            }
        }
    }
    if residual > 1e-8 {
        return Err(Error::MaxIterations { iterations, residual });
    }
    // Foot of A_1 on the line through P_0, kept non-negative.
    let a1 = prog.point(1, t[1]);
    t[0] = a1.sub(prog.base[0]).dot(prog.dir[0]).max(0.0);
    let objective = prog.objective(&t);
    Ok(NlpSolution {
        theta,
        k,
        composed_bound: b_theta(theta, objective),
        objective,
        kkt_residual: residual,
        t,
        iterations,
    })
}

/// Window endpoints with their margins over [`PRIOR_UPPER_BOUND`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaWindow {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub margins: Margins,
    pub h_at_hi: f64,
    pub nlp_at_lo: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margins {
    pub lo: f64,
    pub hi: f64,
}

/// Re-derive both ends of the admissible deployment-angle window.
pub fn theta_window(k: usize, opts: &NlpOptions) -> Result<ThetaWindow> {
    let h = h_lower(THETA_HI);
    let nlp = nlp_lower_bound(THETA_LO, k, opts)?;
    let margins = Margins { lo: nlp.composed_bound - PRIOR_UPPER_BOUND, hi: h - PRIOR_UPPER_BOUND };
    if margins.hi <= 0.0 {
        return Err(Error::WindowViolated { theta: THETA_HI, margin: margins.hi });
    }
    if margins.lo <= 0.0 {
        return Err(Error::WindowViolated { theta: THETA_LO, margin: margins.lo });
    }
    Ok(ThetaWindow { theta_lo: THETA_LO, theta_hi: THETA_HI, margins, h_at_hi: h, nlp_at_lo: nlp.composed_bound, k })
}

/// Program solutions on `grid` equispaced angles of `[lo, hi]`.
pub fn nlp_sweep(lo: f64, hi: f64, grid: usize, k: usize, opts: &NlpOptions) -> Vec<Result<NlpSolution>> {
    let n = grid.max(2) - 1;
    (0..=n)
        .into_par_iter()
        .map(|j| {
            let th = if j == n { hi } else { lo + (hi - lo) * j as f64 / n as f64 };
            nlp_lower_bound(th, k, opts)
        })
        .collect()
}

pub fn write_nlp_csv<W: Write>(w: W, rows: &[NlpSolution]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["theta", "k", "objective", "composed_bound", "kkt_residual"])?;
    for r in rows {
        wr.write_record([
            format!("{:.17e}", r.theta),
            r.k.to_string(),
            format!("{:.17e}", r.objective),
            format!("{:.17e}", r.composed_bound),
            format!("{:.6e}", r.kkt_residual),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
