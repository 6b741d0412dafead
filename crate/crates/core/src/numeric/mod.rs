//! Scalar root finding, one-dimensional minimization and adaptive quadrature.

mod quad;
mod scalar;

pub use quad::{gauss_kronrod, Quadrature};
pub use scalar::{bisect, brent_minimize, golden_section, Minimum};
