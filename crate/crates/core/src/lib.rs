//! Optimal average-case inspection of the unit disk.
//!
//! The crate computes the trajectory that minimizes the expected time until a
//! uniformly random perimeter point of the unit disk is seen from outside the
//! disk, starting at the center. The pipeline runs from the discrete
//! refraction recursion and its continuum ODE limit, through the
//! one-parameter reduction of the control problem, to the lower bounds that
//! pin down the deployment angle, and an independent brute-force oracle.

pub mod bounds;
pub mod convergence;
pub mod cost;
pub mod error;
pub mod feasibility;
pub mod fermat;
pub mod geometry;
pub mod numeric;
pub mod ode;
pub mod optimizer;
pub mod oracle;
pub mod pipeline;
pub mod svg;

pub use error::{Error, Result};

#[cfg(test)]
mod tests;
