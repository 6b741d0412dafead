//! The singular initial-value problem for the limiting refraction angle ψ and
//! the tangent offset τ, integrated jointly with the sensitivity ∂τ/∂τ0.
//!
//! ```text
//! ψ'(x) = −2π + cot ψ(x) / x
//! τ'(x) = 2π (τ(x) cot ψ(x) − 1)
//! ```
//!
//! ψ(0) = π/2. The start is pushed off the singular point with the series
//! ψ ≈ π/2 − πx + (π²/2)x² and τ ≈ c − 2πx + π²c x².

pub mod dop853;

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point2;

use dop853::DenseStep;

/// Abscissa at which the `τ0` parameter is pinned in [`Anchor::Reference`] mode.
pub const X_REF: f64 = 1e-6;

/// How the scalar `τ0` maps onto the initial data of the τ component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Anchor {
    /// `τ0` is the value of τ at [`X_REF`]; the series is used only to move
    /// the start elsewhere. At `x0 = X_REF` this is `τ(x0) = τ0` exactly.
    #[default]
    Reference,
    /// `τ0` is the limit τ(0⁺) of the series.
    Origin,
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeOptions {
    pub x0: f64,
    pub rtol: f64,
    pub atol: f64,
    pub anchor: Anchor,
    pub x_end: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { x0: 1e-6, rtol: 1e-12, atol: 1e-12, anchor: Anchor::Reference, x_end: 1.0 }
    }
}

/// Starting values at `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesInit {
    pub x0: f64,
    pub psi0: f64,
    pub tau_start: f64,
    pub sens_start: f64,
}

/// Origin value `c = τ(0⁺)` of the solution that takes the value `tau0`
/// under `anchor`.
pub fn origin_value(tau0: f64, anchor: Anchor) -> f64 {
    match anchor {
        Anchor::Origin => tau0,
        Anchor::Reference => (tau0 + TAU * X_REF) / (1.0 + PI * PI * X_REF * X_REF),
    }
}

pub fn series_init(tau0: f64, x0: f64, anchor: Anchor) -> SeriesInit {
    let psi0 = FRAC_PI_2 - PI * x0 + 0.5 * PI * PI * x0 * x0;
    let q = 1.0 + PI * PI * x0 * x0;
    let (tau_start, sens_start) = match anchor {
        Anchor::Reference if x0 == X_REF => (tau0, 1.0),
        _ => {
            let c = origin_value(tau0, anchor);
            let dc = match anchor {
                Anchor::Origin => 1.0,
                Anchor::Reference => 1.0 / (1.0 + PI * PI * X_REF * X_REF),
            };
            (c * q - TAU * x0, dc * q)
        }
    };
    SeriesInit { x0, psi0, tau_start, sens_start }
}

/// Right-hand side for `(ψ, τ, ∂τ/∂τ0)`.
pub fn rhs(x: f64, y: &[f64; 3]) -> [f64; 3] {
    let cot = y[0].cos() / y[0].sin();
    [-TAU + cot / x, TAU * (y[1] * cot - 1.0), TAU * cot * y[2]]
}

/// Solution state at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub x: f64,
    pub psi: f64,
    pub tau: f64,
    /// ∂τ/∂τ0.
    pub sens: f64,
}

/// Dense solution of the system on `[x0, x_end]`.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub tau0: f64,
    pub options: OdeOptions,
    pub init: SeriesInit,
    /// Accepted step boundaries.
    pub grid: Vec<f64>,
    pub psi: Vec<f64>,
    pub tau: Vec<f64>,
    pub n_steps: usize,
    pub n_rejected: usize,
    pub n_evaluations: usize,
    steps: Vec<DenseStep<3>>,
}

/// JSON metadata of a solution.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionMeta {
    pub tau0: f64,
    pub x0: f64,
    pub rtol: f64,
    pub atol: f64,
    pub n_steps: usize,
}

/// Integrate from the series start to `options.x_end`.
pub fn integrate(tau0: f64, options: &OdeOptions) -> Result<OdeSolution> {
    if !(tau0 > 0.0) || !tau0.is_finite() {
        return Err(Error::InvalidInput(format!("tau0 must be positive, got {tau0}")));
    }
    if !(options.x0 > 0.0 && options.x0 <= 1e-5) {
        return Err(Error::InvalidInput(format!("x0 must lie in (0, 1e-5], got {}", options.x0)));
    }
    if !(options.rtol > 0.0 && options.atol > 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    let init = series_init(tau0, options.x0, options.anchor);
    let opts = dop853::Options { rtol: options.rtol, atol: options.atol, ..dop853::Options::default() };
    let y0 = [init.psi0, init.tau_start, init.sens_start];
    let tr = dop853::integrate(rhs, options.x0, y0, options.x_end, &opts, |x, y| {
        if y[0] > 0.0 && y[0] < PI && y.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::StepFailure { x, h: 0.0, reason: format!("psi left (0, pi): {}", y[0]) })
        }
    })?;
    let mut grid = Vec::with_capacity(tr.steps.len() + 1);
    let mut psi = Vec::with_capacity(tr.steps.len() + 1);
    let mut tau = Vec::with_capacity(tr.steps.len() + 1);
    for st in &tr.steps {
        let (y, _) = st.eval(st.x);
        grid.push(st.x);
        psi.push(y[0]);
        tau.push(y[1]);
    }
    grid.push(tr.x_end);
    psi.push(tr.y_end[0]);
    tau.push(tr.y_end[1]);
    Ok(OdeSolution {
        tau0,
        options: *options,
        init,
        grid,
        psi,
        tau,
        n_steps: tr.accepted,
        n_rejected: tr.rejected,
        n_evaluations: tr.evaluations,
        steps: tr.steps,
    })
}

impl OdeSolution {
    pub fn x_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    fn step_for(&self, x: f64) -> &DenseStep<3> {
        let i = self.grid.partition_point(|&g| g <= x);
        &self.steps[i.saturating_sub(1).min(self.steps.len() - 1)]
    }

    fn check(&self, x: f64) -> Result<()> {
        if x >= self.x_min() && x <= self.x_max() {
            Ok(())
        } else {
            Err(Error::OutOfRange { x, lo: self.x_min(), hi: self.x_max() })
        }
    }

    /// Dense-output state; `x` must lie in the stored range.
    pub fn state(&self, x: f64) -> Result<State> {
        self.check(x)?;
        Ok(self.state_unchecked(x))
    }

    pub(crate) fn state_unchecked(&self, x: f64) -> State {
        let (y, _) = self.step_for(x).eval(x);
        State { x, psi: y[0], tau: y[1], sens: y[2] }
    }

    /// Derivative of the dense interpolant (not of the right-hand side).
    pub fn interpolant_derivative(&self, x: f64) -> Result<[f64; 3]> {
        self.check(x)?;
        Ok(self.step_for(x).eval(x).1)
    }

    /// Relative residuals of the ψ and τ equations at `x`, with derivatives
    /// taken from the interpolant.
    pub fn residual(&self, x: f64) -> Result<(f64, f64)> {
        self.check(x)?;
        let (y, dy) = self.step_for(x).eval(x);
        let cot = y[0].cos() / y[0].sin();
        let r_psi = (dy[0] + TAU - cot / x).abs() / (1.0 + dy[0].abs());
        let r_tau = (dy[1] / TAU - y[1] * cot + 1.0).abs() / (1.0 + dy[1].abs());
        Ok((r_psi, r_tau))
    }

    /// `T(x) = (cos 2πx − τ sin 2πx, −sin 2πx − τ cos 2πx)`.
    pub fn curve_point(&self, x: f64) -> Result<Point2> {
        let s = self.state(x)?;
        Ok(curve_from_state(x, s.tau))
    }

    /// First component of `T` minus one, and its derivative in `x`.
    pub(crate) fn crossing_function(&self, x: f64) -> (f64, f64) {
        let s = self.state_unchecked(x);
        let (sn, cs) = (TAU * x).sin_cos();
        let dtau = TAU * (s.tau * s.psi.cos() / s.psi.sin() - 1.0);
        let g = cs - s.tau * sn - 1.0;
        let dg = -TAU * sn - dtau * sn - TAU * s.tau * cs;
        (g, dg)
    }

    pub fn meta(&self) -> SolutionMeta {
        SolutionMeta {
            tau0: self.tau0,
            x0: self.options.x0,
            rtol: self.options.rtol,
            atol: self.options.atol,
            n_steps: self.n_steps,
        }
    }

    /// Sample the solution at `resolution + 1` equispaced abscissas.
    pub fn write_csv<W: Write>(&self, w: W, resolution: usize) -> Result<()> {
        let resolution = resolution.max(1);
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "psi", "tau"])?;
        let (a, b) = (self.x_min(), self.x_max());
        for j in 0..=resolution {
            let x = if j == resolution { b } else { a + (b - a) * j as f64 / resolution as f64 };
            let s = self.state_unchecked(x);
            wr.write_record([format!("{:.17e}", x), format!("{:.17e}", s.psi), format!("{:.17e}", s.tau)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn curve_from_state(x: f64, tau: f64) -> Point2 {
    let (s, c) = (TAU * x).sin_cos();
    Point2::new(c - tau * s, -s - tau * c)
}

/// Free-function form of [`OdeSolution::curve_point`].
pub fn curve_point(sol: &OdeSolution, x: f64) -> Result<Point2> {
    sol.curve_point(x)
}

/// Abscissas at which the two-start comparison is made.
pub const SELF_CHECK_POINTS: [f64; 3] = [0.1, 0.5, 0.8];

/// Largest `|ψ_a − ψ_b| + |τ_a − τ_b|` over [`SELF_CHECK_POINTS`] between two
/// integrations started at `x0a` and `x0b`.
pub fn self_check_init(tau0: f64, x0a: f64, x0b: f64, options: &OdeOptions) -> Result<f64> {
    if x0a == x0b {
        return Ok(0.0);
    }
    let a = integrate(tau0, &OdeOptions { x0: x0a, ..*options })?;
    let b = integrate(tau0, &OdeOptions { x0: x0b, ..*options })?;
    let mut gap: f64 = 0.0;
    for x in SELF_CHECK_POINTS {
        let sa = a.state(x)?;
        let sb = b.state(x)?;
        gap = gap.max((sa.psi - sb.psi).abs() + (sa.tau - sb.tau).abs());
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU_STAR: f64 = 1.646_976_860_877_693_6;

    #[test]
    fn reference_start_is_exact() {
        let s = integrate(TAU_STAR, &OdeOptions::default()).unwrap();
        assert_eq!(s.init.tau_start, TAU_STAR);
        assert_eq!(s.tau[0], TAU_STAR);
        assert_eq!(s.x_min(), 1e-6);
        assert_eq!(s.x_max(), 1.0);
    }

    #[test]
    fn origin_start_matches_series() {
        let init = series_init(2.0, 1e-6, Anchor::Origin);
        assert!((init.tau_start - (2.0 - TAU * 1e-6)).abs() < 1e-10);
    }

    #[test]
    fn anchors_describe_the_same_curve() {
        let init_ref = series_init(TAU_STAR, 1e-7, Anchor::Reference);
        let c = origin_value(TAU_STAR, Anchor::Reference);
        let init_org = series_init(c, 1e-7, Anchor::Origin);
        assert!((init_ref.tau_start - init_org.tau_start).abs() < 1e-15);
    }

    #[test]
    fn near_origin_asymptotics() {
        let s = integrate(TAU_STAR, &OdeOptions::default()).unwrap();
        let x = 1e-4;
        let st = s.state(x).unwrap();
        assert!((st.psi - (FRAC_PI_2 - PI * x)).abs() <= 1e-6);
    }

    #[test]
    fn curve_norm_identity() {
        let s = integrate(TAU_STAR, &OdeOptions::default()).unwrap();
        for j in 0..100 {
            let x = 1e-6 + (1.0 - 1e-6) * (j as f64 + 0.37) / 100.0;
            let p = s.curve_point(x).unwrap();
            let t = s.state(x).unwrap().tau;
            assert!((p.dot(p) - (1.0 + t * t)).abs() <= 1e-10);
        }
    }

    #[test]
    fn curve_start_is_a0() {
        let s = integrate(TAU_STAR, &OdeOptions::default()).unwrap();
        let p = s.curve_point(1e-6).unwrap();
        let (sn, cs) = (TAU * 1e-6).sin_cos();
        assert!((p.x - (cs - TAU_STAR * sn)).abs() < 1e-15);
        assert!((p.y + sn + TAU_STAR * cs).abs() < 1e-15);
        assert!((p.y + TAU_STAR).abs() < 1e-5);
    }

    #[test]
    fn out_of_range_rejected() {
        let s = integrate(TAU_STAR, &OdeOptions::default()).unwrap();
        assert_eq!(s.curve_point(1.5).unwrap_err().kind(), "OutOfRange");
        assert_eq!(s.state(0.0).unwrap_err().kind(), "OutOfRange");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(integrate(-1.0, &OdeOptions::default()).is_err());
        assert!(integrate(1.0, &OdeOptions { x0: 1e-3, ..OdeOptions::default() }).is_err());
    }

    #[test]
    fn identical_starts_give_zero_gap() {
        assert_eq!(self_check_init(1.647, 1e-6, 1e-6, &OdeOptions::default()).unwrap(), 0.0);
    }
}
