//! Text formats and snapshot slicing.
//!
//! * Edge events: `u<TAB>v[<TAB>w]<TAB>t` per line, `#` starts a comment line.
//! * Delta files: one record per line, `AV id`, `DV id` or `EW u v dw`.
//! * Partitions: `vertex<TAB>community` per line.
//! * Reports: CSV or JSON rows of [`SnapshotReport`].

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GraphError, IngestError};
use crate::graph::{EdgeChange, GraphBuilder, GraphDelta, VertexId, WeightedGraph};
use crate::partition::{Assignment, CommunityId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeEvent {
    pub u: VertexId,
    pub v: VertexId,
    pub weight: f64,
    pub timestamp: i64,
}

fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            None
        } else {
            Some((i + 1, l.split_whitespace().collect()))
        }
    })
}

fn field<T: FromStr>(line: usize, s: &str, what: &str) -> Result<T, IngestError> {
    s.parse().map_err(|_| IngestError::Parse {
        line,
        msg: format!("invalid {what} {s:?}"),
    })
}

fn checked_edge(line: usize, u: u64, v: u64, w: f64) -> Result<(), IngestError> {
    let err = |source| Err(IngestError::Record { line, source });
    if u == v {
        return err(GraphError::SelfLoop(VertexId(u)));
    }
    if !(w.is_finite() && w > 0.0) {
        return err(GraphError::InvalidWeight(w));
    }
    Ok(())
}

pub fn parse_edge_events_str(text: &str) -> Result<Vec<EdgeEvent>, IngestError> {
    let mut out = Vec::new();
    for (line, f) in records(text) {
        let (u, v, w, t) = match f.as_slice() {
            [u, v, t] => (u, v, "1", t),
            [u, v, w, t] => (u, v, *w, t),
            _ => {
                return Err(IngestError::Parse {
                    line,
                    msg: format!("expected 3 or 4 fields, got {}", f.len()),
                })
            }
        };
        let u: u64 = field(line, u, "vertex")?;
        let v: u64 = field(line, v, "vertex")?;
        let w: f64 = field(line, w, "weight")?;
        let t: i64 = field(line, t, "timestamp")?;
        checked_edge(line, u, v, w)?;
        out.push(EdgeEvent {
            u: VertexId(u),
            v: VertexId(v),
            weight: w,
            timestamp: t,
        });
    }
    Ok(out)
}

pub fn parse_edge_events(path: impl AsRef<Path>) -> Result<Vec<EdgeEvent>, IngestError> {
    parse_edge_events_str(&fs::read_to_string(path)?)
}

pub fn write_edge_events(events: &[EdgeEvent]) -> String {
    let mut s = String::new();
    for e in events {
        writeln!(s, "{}\t{}\t{}\t{}", e.u, e.v, e.weight, e.timestamp).unwrap();
    }
    s
}

/// A static edge list, `u<TAB>v[<TAB>w]` per line.
pub fn parse_edge_list_str(text: &str) -> Result<WeightedGraph, IngestError> {
    let mut b = GraphBuilder::new();
    for (line, f) in records(text) {
        let (u, v, w) = match f.as_slice() {
            [u, v] => (u, v, "1"),
            [u, v, w] => (u, v, *w),
            _ => {
                return Err(IngestError::Parse {
                    line,
                    msg: format!("expected 2 or 3 fields, got {}", f.len()),
                })
            }
        };
        let u: u64 = field(line, u, "vertex")?;
        let v: u64 = field(line, v, "vertex")?;
        let w: f64 = field(line, w, "weight")?;
        checked_edge(line, u, v, w)?;
        b.add_edge(VertexId(u), VertexId(v), w)
            .map_err(|source| IngestError::Record { line, source })?;
    }
    Ok(b.build())
}

pub fn parse_edge_list(path: impl AsRef<Path>) -> Result<WeightedGraph, IngestError> {
    parse_edge_list_str(&fs::read_to_string(path)?)
}

/// One snapshot and the delta that produced it from its predecessor.
///
/// The delta of the first snapshot builds it from the empty graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub graph: WeightedGraph,
    pub delta: GraphDelta,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SnapshotSeries {
    pub snapshots: Vec<Snapshot>,
}

impl SnapshotSeries {
    /// Folds `deltas` over the empty graph.
    pub fn from_deltas(deltas: Vec<GraphDelta>) -> Result<Self, GraphError> {
        let mut g = WeightedGraph::empty();
        let mut snapshots = Vec::with_capacity(deltas.len());
        for delta in deltas {
            g = g.apply_delta(&delta)?;
            snapshots.push(Snapshot {
                graph: g.clone(),
                delta,
            });
        }
        Ok(SnapshotSeries { snapshots })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn graphs(&self) -> impl Iterator<Item = &WeightedGraph> {
        self.snapshots.iter().map(|s| &s.graph)
    }
}

/// Cumulative snapshots over half-open windows `[t0 + k*interval, t0 + (k+1)*interval)`.
///
/// `t0` defaults to the earliest timestamp. Events earlier than `t0` fall into
/// the first snapshot. Windows without events yield snapshots with empty deltas.
pub fn slice_snapshots(
    events: &[EdgeEvent],
    interval: i64,
    t0: Option<i64>,
) -> Result<SnapshotSeries, IngestError> {
    if interval <= 0 {
        return Err(IngestError::InvalidInterval(interval));
    }
    if events.is_empty() {
        return Err(IngestError::EmptyStream);
    }
    let mut sorted: Vec<&EdgeEvent> = events.iter().collect();
    sorted.sort_by_key(|e| e.timestamp);
    let t0 = t0.unwrap_or(sorted[0].timestamp);
    let bucket = |t: i64| {
        if t < t0 {
            0
        } else {
            ((t - t0) / interval) as usize
        }
    };
    let count = bucket(sorted[sorted.len() - 1].timestamp) + 1;
    let mut deltas = vec![GraphDelta::default(); count];
    let mut seen: BTreeSet<VertexId> = BTreeSet::new();
    for e in sorted {
        let d = &mut deltas[bucket(e.timestamp)];
        for x in [e.u, e.v] {
            if seen.insert(x) {
                d.added_vertices.insert(x);
            }
        }
        d.edge_changes.push(EdgeChange::new(e.u, e.v, e.weight));
    }
    Ok(SnapshotSeries::from_deltas(deltas)?)
}

pub fn parse_delta_str(text: &str) -> Result<GraphDelta, IngestError> {
    let mut d = GraphDelta::default();
    for (line, f) in records(text) {
        match f.as_slice() {
            ["AV", id] => {
                let v = VertexId(field(line, id, "vertex")?);
                if d.removed_vertices.contains(&v) {
                    return Err(GraphError::ConflictingDelta(v).into());
                }
                d.added_vertices.insert(v);
            }
            ["DV", id] => {
                let v = VertexId(field(line, id, "vertex")?);
                if d.added_vertices.contains(&v) {
                    return Err(GraphError::ConflictingDelta(v).into());
                }
                d.removed_vertices.insert(v);
            }
            ["EW", u, v, dw] => {
                let u: u64 = field(line, u, "vertex")?;
                let v: u64 = field(line, v, "vertex")?;
                let dw: f64 = field(line, dw, "weight change")?;
                if u == v {
                    return Err(IngestError::Record {
                        line,
                        source: GraphError::SelfLoop(VertexId(u)),
                    });
                }
                if !dw.is_finite() || dw == 0.0 {
                    return Err(IngestError::Record {
                        line,
                        source: GraphError::InvalidWeight(dw),
                    });
                }
                d.edge_changes
                    .push(EdgeChange::new(VertexId(u), VertexId(v), dw));
            }
            _ => {
                return Err(IngestError::Parse {
                    line,
                    msg: "expected `AV id`, `DV id` or `EW u v dw`".into(),
                })
            }
        }
    }
    Ok(d)
}

pub fn parse_delta_file(path: impl AsRef<Path>) -> Result<GraphDelta, IngestError> {
    parse_delta_str(&fs::read_to_string(path)?)
}

/// Serializes `d`: vertex additions, then removals, then edge changes in order.
pub fn write_delta(d: &GraphDelta) -> String {
    let mut s = String::new();
    for v in &d.added_vertices {
        writeln!(s, "AV {v}").unwrap();
    }
    for v in &d.removed_vertices {
        writeln!(s, "DV {v}").unwrap();
    }
    for e in &d.edge_changes {
        writeln!(s, "EW {} {} {}", e.u, e.v, e.delta_w).unwrap();
    }
    s
}

/// File name of the `k`-th delta in a delta directory.
pub fn delta_file_name(k: usize) -> String {
    format!("snapshot_{k:04}.delta")
}

/// Writes one delta file per snapshot into `dir`, returning the paths.
pub fn write_delta_dir(
    series: &SnapshotSeries,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, IngestError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (k, s) in series.snapshots.iter().enumerate() {
        let p = dir.join(delta_file_name(k));
        fs::write(&p, write_delta(&s.delta))?;
        paths.push(p);
    }
    Ok(paths)
}

/// Reads every `*.delta` file of `dir` in file-name order and folds them.
pub fn read_delta_dir(dir: impl AsRef<Path>) -> Result<SnapshotSeries, IngestError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "delta"));
    paths.sort();
    let deltas = paths
        .iter()
        .map(parse_delta_file)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SnapshotSeries::from_deltas(deltas)?)
}

pub fn parse_partition_str(text: &str) -> Result<Assignment, IngestError> {
    let mut a = Assignment::new();
    for (line, f) in records(text) {
        let [v, c] = f.as_slice() else {
            return Err(IngestError::Parse {
                line,
                msg: "expected `vertex community`".into(),
            });
        };
        let v = VertexId(field(line, v, "vertex")?);
        if a.insert(v, CommunityId(field(line, c, "community")?))
            .is_some()
        {
            return Err(IngestError::Parse {
                line,
                msg: format!("vertex {v} listed twice"),
            });
        }
    }
    Ok(a)
}

pub fn parse_partition_file(path: impl AsRef<Path>) -> Result<Assignment, IngestError> {
    parse_partition_str(&fs::read_to_string(path)?)
}

pub fn write_partition(a: &Assignment) -> String {
    let mut s = String::new();
    for (v, c) in a.iter() {
        writeln!(s, "{v}\t{c}").unwrap();
    }
    s
}

/// Per-snapshot measurements of one detector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotReport {
    pub snapshot: usize,
    pub algorithm: String,
    pub modularity: f64,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub elapsed_ns: u64,
    pub cumulative_elapsed_ns: u64,
    pub vertices: usize,
    pub edges: usize,
    pub communities: usize,
}

pub const CSV_HEADER: &str =
    "snapshot,algorithm,modularity,nmi,ari,elapsed_ns,cumulative_elapsed_ns,vertices,edges,communities";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown format {s:?}, expected csv or json")),
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn render_reports(reports: &[SnapshotReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for r in reports {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.snapshot,
                    r.algorithm,
                    r.modularity,
                    opt(r.nmi),
                    opt(r.ari),
                    r.elapsed_ns,
                    r.cumulative_elapsed_ns,
                    r.vertices,
                    r.edges,
                    r.communities
                )
                .unwrap();
            }
            s
        }
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
            s.push('\n');
            s
        }
    }
}

pub fn write_reports(
    reports: &[SnapshotReport],
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<(), IngestError> {
    fs::write(path, render_reports(reports, format))?;
    Ok(())
}

pub fn parse_reports_json(text: &str) -> Result<Vec<SnapshotReport>, IngestError> {
    Ok(serde_json::from_str(text)?)
}
