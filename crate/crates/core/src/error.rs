use thiserror::Error;

/// Errors produced while building, loading, or preparing a network.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PbnError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("node `{node}`: selection probabilities sum to {sum}")]
    ProbabilitySum { node: String, sum: f64 },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
}

impl PbnError {
    pub(crate) fn syntax(line: usize, msg: impl Into<String>) -> Self {
        PbnError::Syntax {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = PbnError> = std::result::Result<T, E>;
