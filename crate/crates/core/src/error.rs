use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The partition sum does not converge (β·a ≤ 0, or NaN).
    #[error("partition sum diverges: beta*a = {reduced} must be positive")]
    DivergentPartition { reduced: f64 },

    /// An argument lies outside the domain of a closed form.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violates a constructor invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Exact integer arithmetic would overflow at this order.
    #[error("order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    /// The root finder could not establish a sign-changing bracket.
    #[error("no sign-changing bracket found for {0}")]
    NoBracket(String),

    #[error("at least {required} samples are required, got {got}")]
    InsufficientSamples { required: usize, got: usize },

    /// The homotopy hits a point where (a_t, β_t) is undefined.
    #[error("degenerate homotopy point at t = {t}: {reason}")]
    DegeneratePoint { t: f64, reason: String },

    #[error("moment-matching system is ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    /// The propagator kernel is singular at t ∈ πZ.
    #[error("propagator is singular at t = {t} (|sin t| < 1e-8)")]
    SingularTime { t: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
