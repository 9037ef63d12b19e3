use alloc::string::String;
use thiserror::Error;

/// Error variants shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Invalid configuration value (bad dimension list, rate out of range, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Operand shapes are incompatible.
    #[error("shape error: {0}")]
    Shape(String),

    /// Input data failed validation.
    #[error("data error: {0}")]
    Data(String),

    /// Treatment vector has only one group where both are required.
    #[error("degenerate treatment: {0}")]
    DegenerateTreatment(String),

    /// An input set is empty where at least one element is required.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A metric needs ground-truth effects that the dataset does not carry.
    #[error("ground truth unavailable: {0}")]
    MissingGroundTruth(String),

    /// A linear system is too ill-conditioned to trust.
    #[error("ill-conditioned system (condition number {condition:.3e}): {context}")]
    IllConditioned { condition: f64, context: String },

    /// A brute-force oracle refused an instance above its size cap.
    #[error("oracle guard: {0}")]
    OracleGuard(String),

    /// A numeric invariant was breached (non-finite values, failed factorization).
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = core::result::Result<T, Error>;
