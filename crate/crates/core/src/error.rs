use thiserror::Error;

/// Errors surfaced by model construction, kernel building and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A cumulant or density was evaluated outside its domain.
    #[error("domain violation: {0}")]
    Domain(String),

    /// Inconsistent or invalid configuration (parameters, tenor, loadings).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A simulated state left the admissible region (1 + delta*L <= 0).
    #[error("invalid state: {0}")]
    State(String),

    /// A batch was queried for data it does not contain.
    #[error("missing data: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
