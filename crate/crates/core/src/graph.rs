//! Weighted undirected snapshots and the deltas between them.
//!
//! A [`WeightedGraph`] is an immutable compressed-adjacency snapshot. Vertices
//! are kept in ascending [`VertexId`] order and every adjacency row is sorted,
//! so iteration order is deterministic everywhere. Mutation happens by
//! building a new snapshot, either through [`GraphBuilder`] or
//! [`WeightedGraph::apply_delta`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Stable vertex identifier.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VertexId(pub u64);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for VertexId {
    fn from(v: u64) -> Self {
        VertexId(v)
    }
}

/// Relative tolerance under which a decreased weight counts as exactly zero.
const ZERO_WEIGHT_TOLERANCE: f64 = 1e-12;

fn check_weight(w: f64) -> Result<(), GraphError> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(GraphError::InvalidWeight(w))
    }
}

/// Undirected weighted simple graph in compressed sparse row form.
#[derive(Clone, Debug, Default)]
pub struct WeightedGraph {
    ids: Vec<VertexId>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    strength: Vec<f64>,
    total_weight: f64,
}

impl PartialEq for WeightedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids
            && self.offsets == other.offsets
            && self.targets == other.targets
            && self.weights == other.weights
    }
}

impl WeightedGraph {
    /// The graph with no vertices.
    pub fn empty() -> Self {
        WeightedGraph {
            offsets: vec![0],
            ..Default::default()
        }
    }

    /// Builds a graph from an edge list, collapsing parallel edges.
    pub fn from_edges<I>(edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (u64, u64, f64)>,
    {
        let mut b = GraphBuilder::new();
        for (u, v, w) in edges {
            b.add_edge(VertexId(u), VertexId(v), w)?;
        }
        Ok(b.build())
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Sum of all edge weights, each undirected edge counted once (`m`).
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Vertices in ascending id order.
    pub fn vertices(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.index_of(v).is_some()
    }

    /// Position of `v` in [`Self::vertices`].
    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.ids.binary_search(&v).ok()
    }

    /// Sum of weights of edges incident to `v` (`k_v`).
    pub fn strength(&self, v: VertexId) -> Option<f64> {
        self.index_of(v).map(|i| self.strength[i])
    }

    pub fn degree(&self, v: VertexId) -> Option<usize> {
        self.index_of(v)
            .map(|i| self.offsets[i + 1] - self.offsets[i])
    }

    pub fn weight(&self, u: VertexId, v: VertexId) -> Option<f64> {
        let (iu, iv) = (self.index_of(u)?, self.index_of(v)?);
        let row = self.offsets[iu]..self.offsets[iu + 1];
        self.targets[row.clone()]
            .binary_search(&iv)
            .ok()
            .map(|k| self.weights[row.start + k])
    }

    /// Neighbors of `v` with edge weights, ascending by id. Empty if `v` is absent.
    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        let range = match self.index_of(v) {
            Some(i) => self.offsets[i]..self.offsets[i + 1],
            None => 0..0,
        };
        range.map(move |k| (self.ids[self.targets[k]], self.weights[k]))
    }

    /// Every undirected edge once as `(u, v, w)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        (0..self.ids.len()).flat_map(move |i| {
            (self.offsets[i]..self.offsets[i + 1])
                .filter(move |&k| self.targets[k] > i)
                .map(move |k| (self.ids[i], self.ids[self.targets[k]], self.weights[k]))
        })
    }

    // Raw CSR access for the detectors.
    pub(crate) fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.targets[r.clone()], &self.weights[r])
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub(crate) fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub(crate) fn raw_weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn strengths(&self) -> &[f64] {
        &self.strength
    }

    fn to_builder(&self) -> GraphBuilder {
        let mut adj = BTreeMap::new();
        for (i, &v) in self.ids.iter().enumerate() {
            let (t, w) = self.row(i);
            let row: BTreeMap<VertexId, f64> =
                t.iter().zip(w).map(|(&j, &x)| (self.ids[j], x)).collect();
            adj.insert(v, row);
        }
        GraphBuilder { adj }
    }

    /// Produces the next snapshot `G ∪ ΔG`. `self` is left untouched.
    ///
    /// Removed vertices lose all incident edges first; edge changes that touch a
    /// removed vertex must be decreases and are subsumed by the removal. Then
    /// additions are applied, then edge changes in order. A weight driven to
    /// zero deletes the edge.
    pub fn apply_delta(&self, d: &GraphDelta) -> Result<WeightedGraph, GraphError> {
        if let Some(v) = d.added_vertices.intersection(&d.removed_vertices).next() {
            return Err(GraphError::ConflictingDelta(*v));
        }
        let mut b = self.to_builder();
        for &v in &d.removed_vertices {
            if !b.remove_vertex(v) {
                return Err(GraphError::UnknownVertex(v));
            }
        }
        for &v in &d.added_vertices {
            if b.adj.contains_key(&v) {
                return Err(GraphError::DuplicateVertex(v));
            }
            b.add_vertex(v);
        }
        for c in &d.edge_changes {
            if c.u == c.v {
                return Err(GraphError::SelfLoop(c.u));
            }
            if !c.delta_w.is_finite() || c.delta_w == 0.0 {
                return Err(GraphError::InvalidWeight(c.delta_w));
            }
            let removed_u = d.removed_vertices.contains(&c.u);
            let removed_v = d.removed_vertices.contains(&c.v);
            if removed_u || removed_v {
                let before = self.weight(c.u, c.v).unwrap_or(0.0);
                if c.delta_w > 0.0 || -c.delta_w > before * (1.0 + ZERO_WEIGHT_TOLERANCE) {
                    return Err(GraphError::NegativeWeight {
                        u: c.u,
                        v: c.v,
                        current: before,
                        delta: c.delta_w,
                    });
                }
                continue;
            }
            b.change_weight(c.u, c.v, c.delta_w)?;
        }
        Ok(b.build())
    }

    /// The delta that turns `self` into `new`.
    ///
    /// Edges incident to removed vertices are listed as explicit deletions. A
    /// weight no single step reaches exactly is written as a deletion followed
    /// by a re-insertion.
    pub fn diff(&self, new: &WeightedGraph) -> GraphDelta {
        let old_ids: BTreeSet<VertexId> = self.ids.iter().copied().collect();
        let new_ids: BTreeSet<VertexId> = new.ids.iter().copied().collect();
        let added_vertices: BTreeSet<VertexId> = new_ids.difference(&old_ids).copied().collect();
        let removed_vertices: BTreeSet<VertexId> = old_ids.difference(&new_ids).copied().collect();

        let old_edges: BTreeMap<(VertexId, VertexId), f64> =
            self.edges().map(|(u, v, w)| ((u, v), w)).collect();
        let new_edges: BTreeMap<(VertexId, VertexId), f64> =
            new.edges().map(|(u, v, w)| ((u, v), w)).collect();
        let keys: BTreeSet<(VertexId, VertexId)> =
            old_edges.keys().chain(new_edges.keys()).copied().collect();

        let mut edge_changes = Vec::new();
        for (u, v) in keys {
            let before = old_edges.get(&(u, v)).copied().unwrap_or(0.0);
            let after = new_edges.get(&(u, v)).copied().unwrap_or(0.0);
            if before == after {
                continue;
            }
            match exact_step(before, after) {
                Some(d) if after != 0.0 => edge_changes.push(EdgeChange::new(u, v, d)),
                _ if before == 0.0 || after == 0.0 => {
                    edge_changes.push(EdgeChange::new(u, v, after - before))
                }
                _ => {
                    edge_changes.push(EdgeChange::new(u, v, -before));
                    edge_changes.push(EdgeChange::new(u, v, after));
                }
            }
        }
        GraphDelta {
            added_vertices,
            removed_vertices,
            edge_changes,
        }
    }
}

/// A `d` with `before + d == after` in floating point, if one lies within a
/// few ulps of the naive difference.
fn exact_step(before: f64, after: f64) -> Option<f64> {
    let mut d = after - before;
    for _ in 0..8 {
        let got = before + d;
        if got == after {
            return Some(d);
        }
        d = if got < after {
            d.next_up()
        } else {
            d.next_down()
        };
    }
    None
}

/// Mutable adjacency used to assemble snapshots.
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    adj: BTreeMap<VertexId, BTreeMap<VertexId, f64>>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, v: VertexId) {
        self.adj.entry(v).or_default();
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn weight(&self, u: VertexId, v: VertexId) -> Option<f64> {
        self.adj.get(&u).and_then(|r| r.get(&v)).copied()
    }

    /// Adds `w` to edge `(u, v)`, creating vertices as needed. Parallel edges accumulate.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId, w: f64) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        check_weight(w)?;
        *self.adj.entry(u).or_default().entry(v).or_insert(0.0) += w;
        *self.adj.entry(v).or_default().entry(u).or_insert(0.0) += w;
        Ok(())
    }

    fn remove_vertex(&mut self, v: VertexId) -> bool {
        match self.adj.remove(&v) {
            Some(row) => {
                for u in row.keys() {
                    if let Some(r) = self.adj.get_mut(u) {
                        r.remove(&v);
                    }
                }
                true
            }
            None => false,
        }
    }

    /// Applies a signed weight change to an edge between existing vertices.
    pub fn change_weight(&mut self, u: VertexId, v: VertexId, dw: f64) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        for x in [u, v] {
            if !self.adj.contains_key(&x) {
                return Err(GraphError::UnknownVertex(x));
            }
        }
        let current = self.weight(u, v).unwrap_or(0.0);
        let next = current + dw;
        if next <= current.abs().max(1.0) * ZERO_WEIGHT_TOLERANCE {
            if next < -current.abs().max(1.0) * ZERO_WEIGHT_TOLERANCE {
                return Err(GraphError::NegativeWeight {
                    u,
                    v,
                    current,
                    delta: dw,
                });
            }
            self.adj.get_mut(&u).map(|r| r.remove(&v));
            self.adj.get_mut(&v).map(|r| r.remove(&u));
        } else {
            self.adj.get_mut(&u).unwrap().insert(v, next);
            self.adj.get_mut(&v).unwrap().insert(u, next);
        }
        Ok(())
    }

    pub fn build(&self) -> WeightedGraph {
        let ids: Vec<VertexId> = self.adj.keys().copied().collect();
        let index: BTreeMap<VertexId, usize> =
            ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut offsets = Vec::with_capacity(ids.len() + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut strength = Vec::with_capacity(ids.len());
        offsets.push(0);
        for row in self.adj.values() {
            let mut k = 0.0;
            for (u, &w) in row {
                targets.push(index[u]);
                weights.push(w);
                k += w;
            }
            strength.push(k);
            offsets.push(targets.len());
        }
        let total_weight = strength.iter().sum::<f64>() / 2.0;
        WeightedGraph {
            ids,
            offsets,
            targets,
            weights,
            strength,
            total_weight,
        }
    }
}

/// One signed edge-weight change. Positive is an addition or weight increase,
/// negative a deletion or weight decrease.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeChange {
    pub u: VertexId,
    pub v: VertexId,
    pub delta_w: f64,
}

impl EdgeChange {
    pub fn new(u: VertexId, v: VertexId, delta_w: f64) -> Self {
        EdgeChange { u, v, delta_w }
    }
}

/// The batch of changes between two consecutive snapshots.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphDelta {
    pub added_vertices: BTreeSet<VertexId>,
    pub removed_vertices: BTreeSet<VertexId>,
    pub edge_changes: Vec<EdgeChange>,
}

impl GraphDelta {
    pub fn is_empty(&self) -> bool {
        self.added_vertices.is_empty()
            && self.removed_vertices.is_empty()
            && self.edge_changes.is_empty()
    }

    /// The delta that builds `g` from the empty graph.
    pub fn from_graph(g: &WeightedGraph) -> GraphDelta {
        WeightedGraph::empty().diff(g)
    }
}
