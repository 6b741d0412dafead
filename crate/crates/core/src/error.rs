use thiserror::Error;

/// Failures raised by the numerical pipeline.
///
/// Every variant carries enough context to be reported as machine-readable
/// JSON by the command-line front end; see [`Error::kind`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("triangle degenerate at step {index}: t = {t} <= tan(alpha/2) = {limit}")]
    TriangleDegenerate { index: usize, t: f64, limit: f64 },

    #[error("angle out of domain at step {index}: y - alpha = {angle} <= 0")]
    AngleDomain { index: usize, angle: f64 },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("integration failed at x = {x} (h = {h}): {reason}")]
    StepFailure { x: f64, h: f64, reason: String },

    #[error("abscissa {x} outside stored range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("no crossing of T1 = 1 on (x0, 1) for tau0 = {tau0}")]
    NoCrossing { tau0: f64 },

    #[error("quadrature did not converge: error estimate {estimate:e} > tolerance {tolerance:e}")]
    QuadratureNoConverge { estimate: f64, tolerance: f64 },

    #[error("cost sweep is not unimodal: {sign_changes} sign changes in successive differences")]
    NotUnimodal { sign_changes: usize },

    #[error("solver hit {iterations} iterations with residual {residual:e}")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("angle window violated: margin at {theta} is {margin}")]
    WindowViolated { theta: f64, margin: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Stable identifier for the failure class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::TriangleDegenerate { .. } => "TriangleDegenerate",
            Error::AngleDomain { .. } => "AngleDomain",
            Error::NoBracket { .. } => "NoBracket",
            Error::StepFailure { .. } => "StepFailure",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::NoCrossing { .. } => "NoCrossing",
            Error::QuadratureNoConverge { .. } => "QuadratureNoConverge",
            Error::NotUnimodal { .. } => "NotUnimodal",
            Error::MaxIterations { .. } => "MaxIterations",
            Error::WindowViolated { .. } => "WindowViolated",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
