use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: malformed DIMACS header: {msg}")]
    Header { line: usize, msg: String },

    #[error("line {line}: malformed clause: {msg}")]
    Clause { line: usize, msg: String },

    #[error("variable {var} out of range (num_vars = {num_vars})")]
    VarOutOfRange { var: usize, num_vars: usize },

    #[error("assignment leaves variable {0} unassigned")]
    Unassigned(usize),

    #[error("{what}: {value} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("clause set has no literals")]
    EmptySet,

    #[error("empty clause")]
    EmptyClause,

    #[error("invalid ordering: {0}")]
    Ordering(String),

    #[error("CRA+ did not reach a fixed point within {0} iterations")]
    NoFixedPoint(usize),

    #[error("graph was built in per-node renaming mode and has no pointwise meaning")]
    NotFunctionPreserving,

    #[error("graph node {0} is missing its residual variable count")]
    MissingVarCount(usize),

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("invalid growth records: {0}")]
    Growth(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("complete tree search guard: {nodes} nodes exceeds {limit}")]
    SearchGuard { nodes: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
