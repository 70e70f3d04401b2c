use thiserror::Error;

use crate::graph::GraphError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("c must be positive, got {0}")]
    NonPositiveC(f64),
    #[error("degenerate drift: mu_plus = {mu_plus} must exceed mu_minus = {mu_minus}")]
    DegenerateDrift { mu_plus: f64, mu_minus: f64 },
    #[error("no certifiable c on the grid ({tried} candidates rejected)")]
    NoCertifiableC { tried: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("state has {found} vertices but {expected} were expected")]
    MismatchedN { expected: usize, found: usize },
    #[error("{oriented_edges} oriented edges exceed the enumeration limit {limit}")]
    TooLarge { oriented_edges: usize, limit: usize },
    #[error("all {trials} replicates were censored by the event budget")]
    AllCensored { trials: u64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
