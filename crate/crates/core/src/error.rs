use thiserror::Error;

pub type Result<T> = std::result::Result<T, MtiError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MtiError {
    /// A parameter is outside the domain of the operation.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("inventory must contain at least one tag")]
    EmptyInventory,

    #[error("duplicate tag id {0:#x}")]
    DuplicateTag(u128),

    #[error("pseudo-ids are not pairwise distinct")]
    DuplicatePseudoId,

    #[error("no collision-free pseudo-id assignment after {0} seeds")]
    PseudoIdExhausted(u32),

    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// The simulated channel produced an observation the protocol cannot
    /// interpret.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("need at least {need} trial records, got {got}")]
    TooFewRecords { got: usize, need: usize },

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
}

impl MtiError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        MtiError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
