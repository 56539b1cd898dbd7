use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("element limit exceeded: carrier has {card} elements, limit is {limit}")]
    SizeLimitExceeded { card: usize, limit: usize },

    #[error("empty set given where a nonempty set is required")]
    EmptySet,

    #[error("epsilon is undefined; tightness needs a finite or infinite bound")]
    UndefinedEpsilon,

    #[error("elements {0} and {1} are incomparable")]
    Incomparable(String, String),

    #[error("distance undefined on comparable pair ({0}, {1})")]
    UndefinedDistance(String, String),

    #[error("quasi-metric is not normal; witness chain ({0}, {1}, {2})")]
    NotNormal(String, String, String),

    #[error("unknown element label {0:?}")]
    UnknownLabel(String),

    #[error("invalid lattice parameters: {0}")]
    InvalidParams(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("malformed instance: {0}")]
    MalformedInstance(String),
}

pub type Result<T> = std::result::Result<T, Error>;
