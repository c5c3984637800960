//! Snapshot pipelines comparing full re-detection with incremental updates.

use std::str::FromStr;
use std::thread;
use std::time::Instant;

use crate::dynamo::{dynamo_update, refine_check, REFINE_DISABLED};
use crate::error::{DynamoError, GraphError};
use crate::graph::{GraphDelta, WeightedGraph};
use crate::ingest::{SnapshotReport, SnapshotSeries};
use crate::louvain::{louvain, LouvainConfig};
use crate::metrics::{ari, nmi};
use crate::partition::{Assignment, CommunityId, Partition};

/// A community detector driven snapshot by snapshot.
pub trait Detector {
    fn name(&self) -> &str;

    /// Whether the detector reuses the previous structure, making refinement meaningful.
    fn incremental(&self) -> bool;

    /// Structure of `g`. `prev` holds the previous snapshot and its structure,
    /// and is `None` for the first snapshot.
    fn detect(
        &self,
        prev: Option<(&WeightedGraph, &Partition)>,
        g: &WeightedGraph,
        delta: &GraphDelta,
    ) -> Result<Partition, DynamoError>;
}

/// Full Louvain on every snapshot.
pub struct LouvainDetector(pub LouvainConfig);

impl Detector for LouvainDetector {
    fn name(&self) -> &str {
        "louvain"
    }

    fn incremental(&self) -> bool {
        false
    }

    fn detect(
        &self,
        _prev: Option<(&WeightedGraph, &Partition)>,
        g: &WeightedGraph,
        _delta: &GraphDelta,
    ) -> Result<Partition, DynamoError> {
        Ok(louvain(g, None, &self.0)?)
    }
}

/// Louvain on the first snapshot, incremental updates afterwards.
pub struct DynamoDetector(pub LouvainConfig);

impl Detector for DynamoDetector {
    fn name(&self) -> &str {
        "dynamo"
    }

    fn incremental(&self) -> bool {
        true
    }

    fn detect(
        &self,
        prev: Option<(&WeightedGraph, &Partition)>,
        g: &WeightedGraph,
        delta: &GraphDelta,
    ) -> Result<Partition, DynamoError> {
        match prev {
            None => Ok(louvain(g, None, &self.0)?),
            Some((g_prev, p_prev)) => dynamo_update(g, g_prev, p_prev, delta, &self.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Louvain,
    Dynamo,
}

impl Algorithm {
    pub fn detector(self, cfg: LouvainConfig) -> Box<dyn Detector + Send + Sync> {
        match self {
            Algorithm::Louvain => Box::new(LouvainDetector(cfg)),
            Algorithm::Dynamo => Box::new(DynamoDetector(cfg)),
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "louvain" => Ok(Algorithm::Louvain),
            "dynamo" => Ok(Algorithm::Dynamo),
            _ => Err(format!(
                "unknown algorithm {s:?}, expected louvain or dynamo"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineConfig {
    pub louvain: LouvainConfig,
    /// Rerun full detection when an incremental result falls below this modularity.
    pub refine_threshold: f64,
    /// Detections per snapshot; the reported time is their mean.
    pub repeat: usize,
    /// Compute a Louvain reference for similarity scores even if Louvain is not selected.
    pub with_baseline: bool,
    /// Maximum number of pipelines run concurrently.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            louvain: LouvainConfig::default(),
            refine_threshold: REFINE_DISABLED,
            repeat: 1,
            with_baseline: false,
            jobs: 1,
        }
    }
}

/// Partitions and detection times of one detector over a series.
#[derive(Clone, Debug)]
pub struct Trace {
    pub name: String,
    pub partitions: Vec<Partition>,
    pub elapsed_ns: Vec<u64>,
    /// Snapshots at which refinement replaced the incremental result.
    pub refined: Vec<usize>,
}

impl Trace {
    pub fn cumulative_ns(&self) -> u64 {
        self.elapsed_ns.iter().sum()
    }
}

/// Runs `detector` over every snapshot of `series` in order.
pub fn run_detector(
    series: &SnapshotSeries,
    detector: &dyn Detector,
    cfg: &PipelineConfig,
) -> Result<Trace, DynamoError> {
    let repeat = cfg.repeat.max(1);
    let mut trace = Trace {
        name: detector.name().to_string(),
        partitions: Vec::with_capacity(series.len()),
        elapsed_ns: Vec::with_capacity(series.len()),
        refined: Vec::new(),
    };
    let mut prev: Option<usize> = None;
    for (k, snap) in series.snapshots.iter().enumerate() {
        let g = &snap.graph;
        if g.total_weight() <= 0.0 {
            return Err(GraphError::EmptyGraph.into());
        }
        let before = prev.map(|i| (&series.snapshots[i].graph, &trace.partitions[i]));
        let mut total = 0u128;
        let mut out = None;
        for _ in 0..repeat {
            let t = Instant::now();
            let mut p = detector.detect(before, g, &snap.delta)?;
            if detector.incremental() && before.is_some() && cfg.refine_threshold > REFINE_DISABLED
            {
                let q = p.modularity(g)?;
                if refine_check(q, cfg.refine_threshold) {
                    p = louvain(g, None, &cfg.louvain)?;
                    if out.is_none() {
                        trace.refined.push(k);
                    }
                }
            }
            total += t.elapsed().as_nanos();
            out = Some(p);
        }
        trace.partitions.push(out.unwrap());
        trace.elapsed_ns.push((total / repeat as u128) as u64);
        prev = Some(k);
    }
    Ok(trace)
}

/// Runs every algorithm over `series` and assembles per-snapshot reports.
///
/// Incremental rows are scored against the same-snapshot Louvain partition when
/// Louvain is selected or a baseline is requested; Louvain rows carry no scores.
pub fn run_pipeline(
    series: &SnapshotSeries,
    algorithms: &[Algorithm],
    cfg: &PipelineConfig,
) -> Result<(Vec<SnapshotReport>, Vec<Trace>), DynamoError> {
    let detectors: Vec<_> = algorithms.iter().map(|a| a.detector(cfg.louvain)).collect();
    let mut traces: Vec<Option<Result<Trace, DynamoError>>> = vec![None; 0];
    traces.resize_with(detectors.len(), || None);
    let jobs = cfg.jobs.max(1);
    for chunk in (0..detectors.len()).collect::<Vec<_>>().chunks(jobs) {
        thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&i| {
                    let d = &detectors[i];
                    (i, s.spawn(move || run_detector(series, d.as_ref(), cfg)))
                })
                .collect();
            for (i, h) in handles {
                traces[i] = Some(h.join().expect("pipeline thread panicked"));
            }
        });
    }
    let traces: Vec<Trace> = traces
        .into_iter()
        .map(|t| t.unwrap())
        .collect::<Result<_, _>>()?;

    let baseline: Option<Vec<Partition>> =
        match algorithms.iter().position(|&a| a == Algorithm::Louvain) {
            Some(i) => Some(traces[i].partitions.clone()),
            None if cfg.with_baseline => {
                let once = PipelineConfig { repeat: 1, ..*cfg };
                Some(run_detector(series, &LouvainDetector(cfg.louvain), &once)?.partitions)
            }
            None => None,
        };

    let mut reports = Vec::new();
    for (alg, trace) in algorithms.iter().zip(&traces) {
        let mut cumulative = 0u64;
        for (k, snap) in series.snapshots.iter().enumerate() {
            let p = &trace.partitions[k];
            cumulative += trace.elapsed_ns[k];
            let scores = match (&baseline, alg) {
                (Some(base), Algorithm::Dynamo) => {
                    let r = base[k].assignment();
                    let n = nmi(r, p.assignment()).ok();
                    let a = ari(r, p.assignment()).ok();
                    (n, a)
                }
                _ => (None, None),
            };
            reports.push(SnapshotReport {
                snapshot: k,
                algorithm: trace.name.clone(),
                modularity: p.modularity(&snap.graph)?,
                nmi: scores.0,
                ari: scores.1,
                elapsed_ns: trace.elapsed_ns[k],
                cumulative_elapsed_ns: cumulative,
                vertices: snap.graph.vertex_count(),
                edges: snap.graph.edge_count(),
                communities: p.community_count(),
            });
        }
    }
    Ok((reports, traces))
}

/// Modularity on `g_t1` of `p_t` carried over unchanged: removed vertices
/// dropped, new vertices as singletons.
pub fn carry_forward_modularity(g_t1: &WeightedGraph, p_t: &Partition) -> Result<f64, GraphError> {
    let mut next = p_t.communities().map(|(c, _)| c.0 + 1).max().unwrap_or(0);
    let mut a = Assignment::new();
    for &v in g_t1.vertices() {
        let c = p_t.community_of(v).unwrap_or_else(|| {
            next += 1;
            CommunityId(next - 1)
        });
        a.insert(v, c);
    }
    Partition::rebuild(g_t1, a)?.modularity(g_t1)
}
