use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition on the relation between arguments was violated
    /// (mismatched geometries, unnormalized input, cutoffs out of order).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical routine ran out of budget before meeting its tolerance.
    #[error("{message}: estimate {estimate:e} with error {error:e}")]
    Numerical {
        message: String,
        estimate: f64,
        error: f64,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
