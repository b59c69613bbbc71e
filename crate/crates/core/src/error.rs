use thiserror::Error;

use crate::formula::FormulaError;

pub type Result<T, E = ErgmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ErgmError {
    #[error("node {node} out of range for a graph on {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),

    #[error("attribute `{name}` has {found} values, expected {expected}")]
    AttributeLength {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("attribute `{0}` is not defined on the graph")]
    MissingAttribute(String),

    #[error("{0} is only defined for undirected graphs")]
    DirectedUnsupported(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(transparent)]
    Formula(#[from] FormulaError),

    #[error("invalid control setting: {0}")]
    InvalidControl(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("parameters are not estimable: {0}")]
    NonEstimable(String),

    #[error("stochastic approximation did not converge: {0}")]
    NonConvergence(String),

    #[error("exhaustive enumeration limited to n <= {max} for this model, got n = {n}")]
    TooLarge { n: usize, max: usize },

    #[error("posterior sample is empty")]
    EmptySample,

    #[error("invalid GOF bins: {0}")]
    InvalidBins(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
