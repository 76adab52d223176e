use thiserror::Error;

/// Errors raised by the discretization, solver and time-stepping layers.
#[derive(Debug, Error)]
pub enum HpsError {
    #[error("invalid Chebyshev order {0}: at least 3 points are required")]
    InvalidOrder(usize),

    #[error("invalid interval [{0}, {1}]: left end must be below right end")]
    InvalidInterval(f64, f64),

    #[error("singular matrix in {context}: pivot ratio {ratio:.3e} below tolerance {tol:.1e}")]
    Singular {
        context: String,
        ratio: f64,
        tol: f64,
    },

    #[error("eigensolver failed to converge on a {0}x{0} matrix")]
    EigenNoConvergence(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("point ({x}, {y}) lies outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("unsupported partition: {0}")]
    UnsupportedPartition(String),

    #[error("internal consistency violated: {0}")]
    Inconsistent(String),

    #[error("unknown tableau '{name}' (available: {available})")]
    UnknownTableau { name: String, available: String },

    #[error("tableau {name} failed validation: {reason}")]
    InvalidTableau { name: String, reason: String },

    #[error("invalid time step {0}: must be positive and finite")]
    InvalidStep(f64),

    #[error("divergence at step {step} (t = {t}): max |u| = {max_abs:.3e}")]
    Divergence { step: usize, t: f64, max_abs: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("operator set mismatch: {0}")]
    OperatorMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HpsError>;
