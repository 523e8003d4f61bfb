use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid argument to a constructor or estimator (message explains which).
    InvalidParam(String),
    /// A point-process draw would exceed the configured point cap.
    IntensityOverflow { expected_points: f64, cap: f64 },
    /// Connection-spec string could not be parsed.
    Parse(String),
    /// Two point sets live in different windows (side, dimension or boundary differ).
    WindowMismatch,
    /// Palm conditioning requires an agent-kind point set.
    NotAgents,
    /// Truncation radius too large for the window under the given boundary rule.
    TruncationTooLarge { radius: f64, limit: f64 },
    /// Operation not available (e.g. a closed form restricted to d = 2).
    Unsupported(String),
    /// Adaptive quadrature failed to reach the requested tolerance.
    QuadratureNoConverge { estimate: f64, abs_error: f64, tol: f64 },
    /// Ellipse intensity queried outside its domain r > |x|.
    EllipseDomain { x_norm: f64, r: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            Error::IntensityOverflow { expected_points, cap } => write!(
                f,
                "expected point count {expected_points:.3e} exceeds cap {cap:.3e}"
            ),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::WindowMismatch => write!(f, "point sets have mismatched windows"),
            Error::NotAgents => write!(f, "palm conditioning requires an agent point set"),
            Error::TruncationTooLarge { radius, limit } => write!(
                f,
                "truncation radius {radius} exceeds limit {limit} for this window/boundary"
            ),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::QuadratureNoConverge { estimate, abs_error, tol } => write!(
                f,
                "quadrature did not converge: estimate {estimate:.6e}, \
                 error {abs_error:.3e} > tolerance {tol:.3e}"
            ),
            Error::EllipseDomain { x_norm, r } => {
                write!(f, "ellipse intensity needs r > |x|, got r = {r}, |x| = {x_norm}")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
