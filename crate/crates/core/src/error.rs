use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// A dense register or an exact enumeration would exceed the configured limits.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("infeasible contribution plan: {0}")]
    InfeasiblePlan(String),
    #[error("no closed-form payoff for {0}; evaluate it with the engine instead")]
    NoClosedForm(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for validation-type failures (bad input, unsupported combination).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Capacity(_))
    }
}
