//! Error type shared by all solver and direction-field operations.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An oracle produced a non-finite value.
    #[error("oracle evaluation failed: {0}")]
    Evaluation(String),

    /// The constraint Jacobian (or a metric-weighted Gram matrix) is
    /// numerically rank deficient at the evaluation point.
    #[error("singular constraint system: {0}")]
    SingularConstraint(String),

    /// A multiplier rule violated its positivity/SPD contract.
    #[error("multiplier rule violation: {0}")]
    MultiplierRule(String),

    /// Invalid or incomplete configuration (missing constants, bad bounds).
    #[error("configuration error: {0}")]
    Config(String),

    /// Mismatched vector/matrix dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Out-of-range index into a trace or recorded run.
    #[error("index error: {0}")]
    Index(String),
}

pub type Result<T> = std::result::Result<T, Error>;
