use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of a function or operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unknown function `{name}`; valid names are: {}", known.join(", "))]
    UnknownFunction { name: String, known: Vec<String> },

    #[error("invalid parameter for `{function}`: {message}")]
    InvalidParameter { function: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("duplicate node {node} in divided difference (coincident nodes are not supported)")]
    DuplicateNode { node: String },

    #[error("function `{0}` has no derivative evaluator")]
    MissingDerivative(String),

    #[error("domain of `{0}` is not right-unbounded")]
    NotRightUnbounded(String),

    #[error("closed-form difference of `{function}` disagrees with the numeric table at order {order}: {closed} vs {numeric}")]
    CrossCheck {
        function: String,
        order: usize,
        closed: String,
        numeric: String,
    },

    #[error("no p <= {max_p} passed the D^p membership test for `{function}`")]
    PRejected { function: String, max_p: usize },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
