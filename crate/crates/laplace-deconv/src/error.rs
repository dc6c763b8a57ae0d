use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by construction, numerical routines, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation precondition was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    /// Carries the partial value and the estimated error.
    #[error("quadrature did not converge: value {value}, estimated error {error_estimate}, tolerance {tolerance}")]
    QuadratureNoConvergence {
        value: f64,
        error_estimate: f64,
        tolerance: f64,
    },

    /// A linear program was infeasible or numerically unresolved.
    #[error("linear program failed: {0}")]
    Linprog(String),

    /// Moment matching could not produce a feasible reduced measure.
    #[error("moment matching failed: {0}")]
    MomentMatch(String),

    /// A requested net would exceed the enumeration size guard.
    #[error("net too large: log-size {log_size:.2} exceeds guard {guard:.2}")]
    NetTooLarge { log_size: f64, guard: f64 },

    /// An achieved approximation or coverage error exceeded its target.
    #[error("verification failed: {0}")]
    Verification(String),

    /// Sampler diagnostics detected a broken invariant.
    #[error("sampler failure: {0}")]
    Sampler(String),

    /// File or serialization problem.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// JSON encode/decode problem.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Shorthand for [`Error::InvalidInput`] with formatted text.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
