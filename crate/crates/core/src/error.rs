use thiserror::Error;

/// Reasons an instance fails the standing assumptions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("TooSmall: instance has {n} vertices, at least 4 are required")]
    TooSmall { n: usize },
    #[error("DemandLength: expected {expected} demands, found {found}")]
    DemandLength { expected: usize, found: usize },
    #[error("VertexOutOfRange: edge {edge} references vertex {vertex} (n = {n})")]
    VertexOutOfRange { edge: usize, vertex: usize, n: usize },
    #[error("ParallelEdgeOrLoop: duplicate edge or loop between {u} and {v}")]
    ParallelEdgeOrLoop { u: usize, v: usize },
    #[error("NonpositiveCost: edge {edge} has cost {cost}")]
    NonpositiveCost { edge: usize, cost: f64 },
    #[error("NonFiniteDemand: vertex {vertex}")]
    NonFiniteDemand { vertex: usize },
    #[error("Disconnected: graph has {components} components")]
    Disconnected { components: usize },
    #[error("ImproperDemands: demands sum to {sum}")]
    ImproperDemands { sum: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("DegenerateLayer: layer has no vertices")]
    DegenerateLayer,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("TooLarge: instance has {n} vertices, exact oracle limit is {limit}")]
    TooLarge { n: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error(
        "NotConverged: stopped after {iterations} iterations with ||P r||_1 = {residual_norm:e} \
         (target {target:e})"
    )]
    NotConverged {
        iterations: usize,
        residual_norm: f64,
        target: f64,
        /// Best routing flow found so far together with its report.
        partial: Box<crate::boost::SolveReport>,
    },
}

/// Failure to read an instance or flow file.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("ParseError: line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}
