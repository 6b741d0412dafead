//! `adi`: command-line front end for the disk-inspection pipeline.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "adi", version, about = "Optimal average-case inspection of the unit disk")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: RunOptions,
}

#[derive(Debug, Clone, Args)]
pub struct RunOptions {
    /// Initial condition τ0 (value of τ at x = 1e-6).
    #[arg(long, global = true)]
    pub tau0: Option<f64>,
    /// Deployment angle θ in radians.
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Number of chain segments.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Grid size of sweeps.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// ODE relative and absolute tolerance.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol_ode: f64,
    /// Bisection tolerance on the deployment parameter.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_bisect: f64,
    /// Brent tolerance on the abscissa of min τ.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol_brent: f64,
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol_quad_rel: f64,
    #[arg(long, global = true, default_value_t = 1e-14)]
    pub tol_quad_abs: f64,
    /// Start abscissa of the integration.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub x0: f64,
    /// Sample count (oracle angles, CSV rows).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Directory for artifact files; nothing is written when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of json,csv,svg.
    #[arg(long, global = true, default_value = "json,csv,svg")]
    pub format: String,
    /// Seed of the randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Minimize the cost over the certified window of initial conditions.
    Optimize,
    /// Integrate one initial condition and report feasibility and cost.
    Trace,
    /// Feasibility certificate across the window (ξ, θ, τ_min per τ0).
    SweepFeasibility,
    /// Cost across the window, with successively zoomed grids.
    SweepCost {
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Relaxed chain program at one angle, or a sweep of angles in [0, θ] when --grid is given.
    LowerBound {
        /// Use weights (i−1)/k instead of (i−1)/(k+1).
        #[arg(long)]
        weights_k: bool,
    },
    /// Both ends of the admissible deployment-angle window.
    AngleBounds,
    /// Brute-force oracle cross-checks against the analytic values.
    Verify,
    /// Discrete-to-continuum convergence table.
    Converge,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    commands::run(&cli)
}
