use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside its admissible range.
    #[error("invalid `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    /// The rule pays out more than one block reward per block.
    #[error("rule pays out {mass} block rewards per block (must be at most 1)")]
    Ponzi { mass: f64 },

    /// The multiplier search could not meet the budget to tolerance.
    #[error("budget of {budget} unreachable: best allocation sums to {achieved}")]
    Infeasible { budget: f64, achieved: f64 },

    /// A simulation or CLI configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }
}
