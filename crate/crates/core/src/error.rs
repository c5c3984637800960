use thiserror::Error;

use crate::graph::VertexId;
use crate::partition::CommunityId;

/// Errors from graph construction, delta application and partition bookkeeping.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("vertex {0} already exists")]
    DuplicateVertex(VertexId),
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("invalid edge weight {0}")]
    InvalidWeight(f64),
    #[error("weight change {delta} on edge ({u}, {v}) exceeds current weight {current}")]
    NegativeWeight {
        u: VertexId,
        v: VertexId,
        current: f64,
        delta: f64,
    },
    #[error("vertex {0} is both added and removed")]
    ConflictingDelta(VertexId),
    #[error("graph has no edges; modularity is undefined")]
    EmptyGraph,
    #[error("vertex {0} has no community")]
    UnassignedVertex(VertexId),
}

/// Errors from the incremental updater.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamoError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("vertices {0} and {1} are already in the same community")]
    SameCommunity(VertexId, VertexId),
    #[error("degenerate denominator in threshold")]
    DegenerateDenominator,
    #[error("subset must be a non-empty proper subset of community {0}")]
    InvalidSubset(CommunityId),
    #[error("snapshots are inconsistent with the delta: {0}")]
    InconsistentSnapshots(String),
}

/// Errors from partition-similarity metrics and the exhaustive oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("partitions cover different vertex sets")]
    VertexSetMismatch,
    #[error("need at least {0} vertices")]
    TooFewVertices(usize),
    #[error("pair-count denominator is zero for non-identical partitions")]
    DegenerateDenominator,
    #[error("exhaustive search limited to {max} vertices, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Errors from file parsing, slicing and report writing.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: GraphError,
    },
    #[error("event stream is empty")]
    EmptyStream,
    #[error("interval must be positive, got {0}")]
    InvalidInterval(i64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
