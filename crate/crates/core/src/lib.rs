//! Incremental modularity-based community detection on evolving weighted networks.
//!
//! * [`graph`]: immutable weighted snapshots and deltas between them.
//! * [`partition`]: community assignments with modularity aggregates.
//! * [`louvain`]: static Louvain detection from singletons or a given partition.
//! * [`dynamo`]: incremental updates driven by snapshot deltas.
//! * [`metrics`]: NMI, ARI and an exhaustive modularity oracle for small graphs.
//! * [`ingest`]: event streams, delta files, partitions and report output.
//! * [`synthgen`]: seeded planted-partition evolving networks.
//! * [`harness`]: timed snapshot pipelines.

pub mod dynamo;
pub mod error;
pub mod graph;
pub mod harness;
pub mod ingest;
pub mod louvain;
pub mod metrics;
pub mod partition;
pub mod synthgen;

pub use dynamo::{
    bisplit_threshold, ccea_merge_threshold, classify, dynamo_update, init, refine_check,
    ChangeKind, InitPlan,
};
pub use error::{DynamoError, GraphError, IngestError, MetricsError};
pub use graph::{EdgeChange, GraphBuilder, GraphDelta, VertexId, WeightedGraph};
pub use louvain::{
    compress, local_moving_pass, louvain, louvain_traced, CompressedGraph, LouvainConfig,
};
pub use metrics::{ari, exhaustive_best_partition, nmi};
pub use partition::{
    modularity, pairwise_modularity, Assignment, Community, CommunityId, Partition,
};
pub use synthgen::{generate, Churn, GenConfig, Generated, SynthError};
