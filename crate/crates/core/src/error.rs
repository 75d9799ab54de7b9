use thiserror::Error;

/// Errors raised by the model library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (e.g. a time off the grid range).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs violate a structural invariant (unsorted nodes, bad loadings, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A quote or record cannot be mapped onto the tenor grid.
    #[error("ingestion error: {0}")]
    Ingestion(String),

    /// A curve could not be calibrated to its quotes.
    #[error("calibration failed at pillar T={pillar}: {reason}")]
    Calibration { pillar: f64, reason: String },

    /// The model or a claim references something that is not configured.
    #[error("configuration error: {0}")]
    Config(String),

    /// Misuse of the stepping interface (e.g. a step crossing a grid node).
    #[error("scheduling error: {0}")]
    Schedule(String),
}

pub type Result<T> = std::result::Result<T, Error>;
