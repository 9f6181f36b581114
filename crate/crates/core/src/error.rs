use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("pinned action `{action}` for agent {agent} at depth {depth} is not legal")]
    ConstraintViolation {
        agent: usize,
        depth: usize,
        action: String,
    },

    #[error("estimation failed for agent {agent}: {detail}")]
    EstimationFailure { agent: usize, detail: String },

    #[error("illegal action for agent {agent}: {detail}")]
    IllegalAction { agent: usize, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("agent {0} has constant utility over the sample; rerun with a larger sample")]
    DegenerateAgent(usize),

    #[error("policy for agent {agent} failed: {detail}")]
    Policy { agent: usize, detail: String },

    /// An out-of-process policy (e.g. a language-model endpoint) failed.
    #[error("external policy for agent {agent} failed: {detail}")]
    External { agent: usize, detail: String },

    #[error("no counterfactual available: {0}")]
    NoFeasibleAction(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
