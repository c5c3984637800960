//! Seeded planted-partition generator for evolving networks.
//!
//! Snapshot 0 draws every intra-block pair with probability `p_in` and every
//! inter-block pair with `p_out`. Each later snapshot applies a fixed number of
//! changes of each kind, drawn uniformly from the applicable candidates.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamo::{Change, ChangeKind};
use crate::error::GraphError;
use crate::graph::{EdgeChange, GraphDelta, VertexId, WeightedGraph};
use crate::ingest::{write_delta, write_edge_events, EdgeEvent, SnapshotSeries};
use crate::partition::{Assignment, CommunityId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("infeasible churn: {0}")]
    InfeasibleChurn(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Number of changes of each kind applied per snapshot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Churn {
    pub icea: usize,
    pub ccea: usize,
    pub iced: usize,
    pub cced: usize,
    pub vertex_add: usize,
    pub vertex_del: usize,
}

impl Churn {
    pub fn total(&self) -> usize {
        self.icea + self.ccea + self.iced + self.cced + self.vertex_add + self.vertex_del
    }

    /// Whether the churn only ever adds vertices, edges or weight.
    pub fn additions_only(&self) -> bool {
        self.iced == 0 && self.cced == 0 && self.vertex_del == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub num_communities: usize,
    pub community_size: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Total number of snapshots including the initial one.
    pub num_snapshots: usize,
    pub churn: Churn,
    /// Inclusive range for new edge weights and weight increases.
    pub weight_range: (f64, f64),
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            num_communities: 4,
            community_size: 50,
            p_in: 0.3,
            p_out: 0.01,
            num_snapshots: 24,
            churn: Churn {
                icea: 2,
                ccea: 16,
                iced: 2,
                cced: 16,
                vertex_add: 1,
                vertex_del: 1,
            },
            weight_range: (1.0, 2.0),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.into()));
        if self.num_communities < 2 {
            return bad("need at least 2 communities");
        }
        if self.community_size < 3 {
            return bad("community size must be at least 3");
        }
        if !(0.0..=1.0).contains(&self.p_in) || !(0.0..=1.0).contains(&self.p_out) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.p_in <= self.p_out {
            return bad("p_in must exceed p_out");
        }
        if self.num_snapshots == 0 {
            return bad("need at least one snapshot");
        }
        let (lo, hi) = self.weight_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return bad("weight range must satisfy 0 < lo <= hi");
        }
        let intra = (self.community_size - 1) as f64 * self.p_in;
        let inter = ((self.num_communities - 1) * self.community_size) as f64 * self.p_out;
        if intra <= inter {
            return bad("expected intra-block degree must exceed expected inter-block degree");
        }
        Ok(())
    }
}

/// Everything produced by one generator run.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub series: SnapshotSeries,
    /// Planted blocks per snapshot.
    pub ground_truth: Vec<Assignment>,
    /// Intended kind of every change of every delta, in delta order.
    pub change_kinds: Vec<Vec<(Change, ChangeKind)>>,
    /// Timestamped event stream (snapshot index as timestamp), present only
    /// when the churn never deletes or decreases anything.
    pub event_file: Option<String>,
    pub delta_files: Vec<String>,
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
}

impl Gen {
    fn weight(&mut self) -> f64 {
        let (lo, hi) = self.cfg.weight_range;
        if lo == hi {
            lo
        } else {
            self.rng.random_range(lo..=hi)
        }
    }

    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        xs[self.rng.random_range(0..xs.len())]
    }
}

fn key(u: VertexId, v: VertexId) -> (VertexId, VertexId) {
    (u.min(v), u.max(v))
}

/// Vertices whose removal disconnects their component.
pub fn articulation_points(g: &WeightedGraph) -> BTreeSet<VertexId> {
    let n = g.vertex_count();
    let ids = g.vertices();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut out = BTreeSet::new();
    let mut time = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = time;
        low[root] = time;
        time += 1;
        let mut root_children = 0;
        let mut stack: Vec<(usize, usize, Vec<usize>)> = vec![(root, usize::MAX, nbrs(g, root))];
        while let Some((v, parent, rest)) = stack.last_mut() {
            let (v, parent) = (*v, *parent);
            if let Some(u) = rest.pop() {
                if disc[u] == usize::MAX {
                    disc[u] = time;
                    low[u] = time;
                    time += 1;
                    if v == root {
                        root_children += 1;
                    }
                    stack.push((u, v, nbrs(g, u)));
                } else if u != parent {
                    low[v] = low[v].min(disc[u]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[v]);
                    if p != root && low[v] >= disc[p] {
                        out.insert(ids[p]);
                    }
                }
            }
        }
        if root_children > 1 {
            out.insert(ids[root]);
        }
    }
    out
}

fn nbrs(g: &WeightedGraph, i: usize) -> Vec<usize> {
    g.row(i).0.to_vec()
}

fn infeasible<T>(msg: String) -> Result<T, SynthError> {
    Err(SynthError::InfeasibleChurn(msg))
}

pub fn generate(cfg: &GenConfig) -> Result<Generated, SynthError> {
    cfg.validate()?;
    let mut gen = Gen {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg: *cfg,
    };
    let n = cfg.num_communities * cfg.community_size;
    let block_of = |v: usize| v / cfg.community_size;

    let mut truth = Assignment::new();
    let mut first = GraphDelta::default();
    let mut degree = vec![0usize; n];
    for u in 0..n {
        truth.insert(VertexId(u as u64), CommunityId(block_of(u) as u64));
        for v in u + 1..n {
            let p = if block_of(u) == block_of(v) {
                cfg.p_in
            } else {
                cfg.p_out
            };
            if gen.rng.random_bool(p) {
                let w = gen.weight();
                first
                    .edge_changes
                    .push(EdgeChange::new(VertexId(u as u64), VertexId(v as u64), w));
                degree[u] += 1;
                degree[v] += 1;
            }
        }
    }
    for u in 0..n {
        if degree[u] == 0 {
            let b = block_of(u);
            let mut mate = u;
            while mate == u {
                mate = b * cfg.community_size + gen.rng.random_range(0..cfg.community_size);
            }
            let w = gen.weight();
            first.edge_changes.push(EdgeChange::new(
                VertexId(u as u64),
                VertexId(mate as u64),
                w,
            ));
            degree[u] += 1;
            degree[mate] += 1;
        }
    }
    first.added_vertices = (0..n as u64).map(VertexId).collect();

    let mut deltas = vec![first];
    let mut ground_truth = vec![truth.clone()];
    let mut change_kinds = vec![Vec::new()];
    let mut g = WeightedGraph::empty().apply_delta(&deltas[0])?;
    let mut next_id = n as u64;

    for _ in 1..cfg.num_snapshots {
        let (d, kinds) = churn_step(&mut gen, &g, &mut truth, &mut next_id)?;
        g = g.apply_delta(&d)?;
        deltas.push(d);
        ground_truth.push(truth.clone());
        change_kinds.push(kinds);
    }

    let delta_files = deltas.iter().map(write_delta).collect();
    let has_events =
        cfg.num_snapshots == 1 || cfg.churn.icea + cfg.churn.ccea + cfg.churn.vertex_add > 0;
    let event_file = (cfg.churn.additions_only() && has_events).then(|| {
        let events: Vec<EdgeEvent> = deltas
            .iter()
            .enumerate()
            .flat_map(|(t, d)| {
                d.edge_changes.iter().map(move |e| EdgeEvent {
                    u: e.u,
                    v: e.v,
                    weight: e.delta_w,
                    timestamp: t as i64,
                })
            })
            .collect();
        write_edge_events(&events)
    });
    let series = SnapshotSeries::from_deltas(deltas)?;
    Ok(Generated {
        series,
        ground_truth,
        change_kinds,
        event_file,
        delta_files,
    })
}

fn churn_step(
    gen: &mut Gen,
    g: &WeightedGraph,
    truth: &mut Assignment,
    next_id: &mut u64,
) -> Result<(GraphDelta, Vec<(Change, ChangeKind)>), SynthError> {
    let churn = gen.cfg.churn;
    let mut d = GraphDelta::default();
    let mut kinds = Vec::new();

    let mut blocks: BTreeMap<CommunityId, Vec<VertexId>> = truth.groups();

    if churn.vertex_del > 0 {
        let cut = articulation_points(g);
        for _ in 0..churn.vertex_del {
            let eligible = |v: &VertexId| {
                !d.removed_vertices.contains(v) && blocks[&truth.get(*v).unwrap()].len() > 3
            };
            let safe: Vec<VertexId> = g
                .vertices()
                .iter()
                .copied()
                .filter(|v| eligible(v) && !cut.contains(v))
                .collect();
            let pool = if safe.is_empty() {
                g.vertices().iter().copied().filter(eligible).collect()
            } else {
                safe
            };
            if pool.is_empty() {
                return infeasible("no vertex can be removed".into());
            }
            let v = gen.pick(&pool);
            d.removed_vertices.insert(v);
            let b = truth.remove(v).unwrap();
            blocks.get_mut(&b).unwrap().retain(|&x| x != v);
            kinds.push((Change::RemoveVertex(v), ChangeKind::VertexDel));
        }
    }

    let alive = |v: VertexId, d: &GraphDelta| !d.removed_vertices.contains(&v);
    let mut used: HashSet<(VertexId, VertexId)> = HashSet::new();

    for _ in 0..churn.vertex_add {
        let k = VertexId(*next_id);
        *next_id += 1;
        let block = CommunityId(gen.rng.random_range(0..gen.cfg.num_communities) as u64);
        d.added_vertices.insert(k);
        kinds.push((Change::AddVertex(k), ChangeKind::VertexAdd));
        let mut edges = Vec::new();
        for (&b, members) in &blocks {
            let p = if b == block {
                gen.cfg.p_in
            } else {
                gen.cfg.p_out
            };
            for &u in members {
                if gen.rng.random_bool(p) {
                    edges.push(u);
                }
            }
        }
        if edges.is_empty() {
            let mates = blocks[&block].clone();
            edges.push(gen.pick(&mates));
        }
        for u in edges {
            let e = EdgeChange::new(k, u, gen.weight());
            d.edge_changes.push(e);
            kinds.push((Change::Edge(e), ChangeKind::VertexAdd));
            used.insert(key(k, u));
        }
        truth.insert(k, block);
        blocks.get_mut(&block).unwrap().push(k);
    }

    let old: Vec<(VertexId, VertexId, f64, bool)> = g
        .edges()
        .filter(|&(u, v, _)| alive(u, &d) && alive(v, &d))
        .map(|(u, v, w)| (u, v, w, truth.get(u) == truth.get(v)))
        .collect();
    let block_list: Vec<Vec<VertexId>> = blocks
        .values()
        .map(|m| m.iter().copied().filter(|v| g.contains(*v)).collect())
        .collect();

    for (count, intra) in [(churn.icea, true), (churn.ccea, false)] {
        for _ in 0..count {
            let mut found = None;
            for _ in 0..10_000 {
                let a = gen.rng.random_range(0..block_list.len());
                let b = if intra {
                    a
                } else {
                    let mut b = gen.rng.random_range(0..block_list.len() - 1);
                    if b >= a {
                        b += 1;
                    }
                    b
                };
                if block_list[a].is_empty() || block_list[b].is_empty() {
                    continue;
                }
                let u = gen.pick(&block_list[a]);
                let v = gen.pick(&block_list[b]);
                if u != v && !used.contains(&key(u, v)) {
                    found = Some((u, v));
                    break;
                }
            }
            let Some((u, v)) = found else {
                return infeasible("no vertex pair left for an edge increase".into());
            };
            used.insert(key(u, v));
            let e = EdgeChange::new(u, v, gen.weight());
            d.edge_changes.push(e);
            let kind = if intra {
                ChangeKind::IceaWi
            } else {
                ChangeKind::CceaWi
            };
            kinds.push((Change::Edge(e), kind));
        }
    }

    for (count, intra) in [(churn.iced, true), (churn.cced, false)] {
        let mut pool: Vec<(VertexId, VertexId, f64)> = old
            .iter()
            .filter(|e| e.3 == intra && !used.contains(&key(e.0, e.1)))
            .map(|e| (e.0, e.1, e.2))
            .collect();
        if pool.len() < count {
            return infeasible(format!(
                "{count} {} decreases requested, {} edges available",
                if intra { "intra-block" } else { "inter-block" },
                pool.len()
            ));
        }
        for _ in 0..count {
            let (u, v, w) = pool.swap_remove(gen.rng.random_range(0..pool.len()));
            used.insert(key(u, v));
            let dw = if gen.rng.random_bool(0.5) {
                -w
            } else {
                -0.5 * w
            };
            let e = EdgeChange::new(u, v, dw);
            d.edge_changes.push(e);
            let kind = if intra {
                ChangeKind::IcedWd
            } else {
                ChangeKind::CcedWd
            };
            kinds.push((Change::Edge(e), kind));
        }
    }
    Ok((d, kinds))
}
