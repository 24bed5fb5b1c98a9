use thiserror::Error;

/// Errors raised by the simulator engines and the command layer.
#[derive(Debug, Error)]
pub enum GroverError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structurally invalid input (non-unitary mixing, malformed config, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A state violated one of its invariants (trace, norm, hermiticity).
    #[error("state error: {0}")]
    State(String),

    /// A memory guard refused the requested system size.
    #[error("resource guard: {0}")]
    Resource(String),

    /// Floating-point bookkeeping drifted past its tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A Kraus branch with zero weight was requested.
    #[error("impossible outcome: branch has squared norm {0:e}")]
    ImpossibleOutcome(f64),

    #[error("fit error: {0}")]
    Fit(String),

    /// A cross-check or tolerance gate failed.
    #[error("tolerance check failed: {0}")]
    Tolerance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GroverError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            GroverError::Domain(_) | GroverError::Validation(_) | GroverError::Fit(_) => 2,
            GroverError::State(_)
            | GroverError::Numerical(_)
            | GroverError::ImpossibleOutcome(_)
            | GroverError::Tolerance(_) => 3,
            GroverError::Resource(_) => 4,
            GroverError::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, GroverError>;
