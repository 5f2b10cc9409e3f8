use thiserror::Error;

use crate::algebra::Alphabet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the domain of an operation (unstable key, even double factorial, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("alphabet mismatch: {left:?} vs {right:?}")]
    AlphabetMismatch { left: Alphabet, right: Alphabet },

    /// A coefficient needed by a relation is not known yet. Raised when the
    /// evaluation order does not respect the recursion's dependencies.
    #[error("dependency error: coefficient {what} is not available")]
    Dependency { what: String },

    /// The pivot unknown appears with coefficient zero, so the relation cannot be solved for it.
    #[error("zero pivot in operator {operator}")]
    ZeroPivot { operator: String },

    #[error("operator {operator} has no unique leading term")]
    MissingPivot { operator: String },

    /// The pivot unknown appeared non-linearly in a relation.
    #[error("relation from {operator} is not linear in its pivot")]
    NonlinearRelation { operator: String },

    #[error("resource bound exceeded: {0}")]
    Resource(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("cache error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
