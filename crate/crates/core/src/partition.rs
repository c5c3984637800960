//! Community assignments and the per-community modularity aggregates.
//!
//! For a community `c` the aggregates are
//!
//! * `alpha_c`: sum of `A_ij` over ordered pairs `i, j` inside `c`, so every
//!   intra-community edge contributes twice its weight;
//! * `beta_c`: sum of member strengths `k_i`.
//!
//! With these, `Q = (1/2m) * sum_c (alpha_c - beta_c^2 / 2m)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::graph::{VertexId, WeightedGraph};

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct CommunityId(pub u64);

impl fmt::Display for CommunityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A plain vertex → community labelling, with no graph attached.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment(BTreeMap<VertexId, CommunityId>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every vertex of `g` in its own community, labelled by position.
    pub fn singletons(g: &WeightedGraph) -> Self {
        g.vertices()
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, CommunityId(i as u64)))
            .collect()
    }

    pub fn insert(&mut self, v: VertexId, c: CommunityId) -> Option<CommunityId> {
        self.0.insert(v, c)
    }

    pub fn remove(&mut self, v: VertexId) -> Option<CommunityId> {
        self.0.remove(&v)
    }

    pub fn get(&self, v: VertexId) -> Option<CommunityId> {
        self.0.get(&v).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, CommunityId)> + '_ {
        self.0.iter().map(|(&v, &c)| (v, c))
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.0.keys().copied()
    }

    pub fn community_count(&self) -> usize {
        self.0.values().collect::<BTreeSet<_>>().len()
    }

    /// Groups vertices by community, both levels ascending.
    pub fn groups(&self) -> BTreeMap<CommunityId, Vec<VertexId>> {
        let mut out: BTreeMap<CommunityId, Vec<VertexId>> = BTreeMap::new();
        for (&v, &c) in &self.0 {
            out.entry(c).or_default().push(v);
        }
        out
    }

    /// Relabels communities `0, 1, ...` in order of their smallest member.
    pub fn canonical(&self) -> Assignment {
        let mut next = 0u64;
        let mut map = BTreeMap::new();
        self.iter()
            .map(|(v, c)| {
                let id = *map.entry(c).or_insert_with(|| {
                    next += 1;
                    CommunityId(next - 1)
                });
                (v, id)
            })
            .collect()
    }

    /// True when both assignments induce the same grouping.
    pub fn same_grouping(&self, other: &Assignment) -> bool {
        self.canonical() == other.canonical()
    }

    pub fn together(&self, a: VertexId, b: VertexId) -> bool {
        matches!((self.get(a), self.get(b)), (Some(x), Some(y)) if x == y)
    }
}

impl FromIterator<(VertexId, CommunityId)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (VertexId, CommunityId)>>(iter: T) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

/// Aggregates of one community.
#[derive(Clone, Debug, PartialEq)]
pub struct Community {
    pub members: Vec<VertexId>,
    pub alpha: f64,
    pub beta: f64,
}

/// A partition of a specific graph's vertex set with per-community aggregates.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    assignment: Assignment,
    communities: BTreeMap<CommunityId, Community>,
}

impl Partition {
    /// Builds a partition and computes its aggregates from scratch.
    ///
    /// This is the reference recomputation that incrementally maintained
    /// aggregates are checked against.
    pub fn rebuild(g: &WeightedGraph, assignment: Assignment) -> Result<Partition, GraphError> {
        for v in assignment.vertices() {
            if !g.contains(v) {
                return Err(GraphError::UnknownVertex(v));
            }
        }
        if assignment.len() != g.vertex_count() {
            let v = g
                .vertices()
                .iter()
                .find(|&&v| assignment.get(v).is_none())
                .copied()
                .expect("size mismatch implies an unassigned vertex");
            return Err(GraphError::UnassignedVertex(v));
        }
        let mut communities: BTreeMap<CommunityId, Community> = BTreeMap::new();
        for (v, c) in assignment.iter() {
            let entry = communities.entry(c).or_insert_with(|| Community {
                members: Vec::new(),
                alpha: 0.0,
                beta: 0.0,
            });
            entry.members.push(v);
            entry.beta += g.strength(v).unwrap_or(0.0);
            for (u, w) in g.neighbors(v) {
                if assignment.get(u) == Some(c) {
                    entry.alpha += w;
                }
            }
        }
        Ok(Partition {
            assignment,
            communities,
        })
    }

    pub fn singletons(g: &WeightedGraph) -> Partition {
        Partition::rebuild(g, Assignment::singletons(g)).expect("singletons cover the graph")
    }

    /// Assembles a partition from aggregates maintained elsewhere.
    pub(crate) fn from_parts(
        assignment: Assignment,
        communities: BTreeMap<CommunityId, Community>,
    ) -> Partition {
        Partition {
            assignment,
            communities,
        }
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn into_assignment(self) -> Assignment {
        self.assignment
    }

    pub fn community_of(&self, v: VertexId) -> Option<CommunityId> {
        self.assignment.get(v)
    }

    pub fn community(&self, c: CommunityId) -> Option<&Community> {
        self.communities.get(&c)
    }

    pub fn communities(&self) -> impl Iterator<Item = (CommunityId, &Community)> + '_ {
        self.communities.iter().map(|(&c, x)| (c, x))
    }

    pub fn community_count(&self) -> usize {
        self.communities.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.assignment.len()
    }

    /// Aggregate-form modularity. Fails on an edgeless graph or a partition of another graph.
    pub fn modularity(&self, g: &WeightedGraph) -> Result<f64, GraphError> {
        modularity(g, self)
    }

    /// Largest absolute difference between stored and recomputed aggregates.
    pub fn aggregate_drift(&self, g: &WeightedGraph) -> Result<f64, GraphError> {
        let fresh = Partition::rebuild(g, self.assignment.clone())?;
        let mut drift: f64 = 0.0;
        for (c, x) in &self.communities {
            let y = fresh
                .communities
                .get(c)
                .ok_or(GraphError::UnassignedVertex(x.members[0]))?;
            drift = drift.max((x.alpha - y.alpha).abs());
            drift = drift.max((x.beta - y.beta).abs());
        }
        if fresh.communities.len() != self.communities.len() {
            return Ok(f64::INFINITY);
        }
        Ok(drift)
    }
}

fn check_cover(g: &WeightedGraph, a: &Assignment) -> Result<(), GraphError> {
    for &v in g.vertices() {
        if a.get(v).is_none() {
            return Err(GraphError::UnassignedVertex(v));
        }
    }
    if a.len() != g.vertex_count() {
        let extra = a.vertices().find(|&v| !g.contains(v)).unwrap();
        return Err(GraphError::UnknownVertex(extra));
    }
    Ok(())
}

/// Modularity from community aggregates.
pub fn modularity(g: &WeightedGraph, p: &Partition) -> Result<f64, GraphError> {
    let m = g.total_weight();
    if m <= 0.0 {
        return Err(GraphError::EmptyGraph);
    }
    check_cover(g, &p.assignment)?;
    let two_m = 2.0 * m;
    let sum: f64 = p
        .communities
        .values()
        .map(|c| c.alpha - c.beta * c.beta / two_m)
        .sum();
    Ok(sum / two_m)
}

/// Modularity by direct summation over all vertex pairs.
///
/// Quadratic in the vertex count; meant as an independent cross-check of
/// [`modularity`].
pub fn pairwise_modularity(g: &WeightedGraph, a: &Assignment) -> Result<f64, GraphError> {
    let m = g.total_weight();
    if m <= 0.0 {
        return Err(GraphError::EmptyGraph);
    }
    check_cover(g, a)?;
    let two_m = 2.0 * m;
    let vs = g.vertices();
    let mut sum = 0.0;
    for &i in vs {
        for &j in vs {
            if a.get(i) != a.get(j) {
                continue;
            }
            let aij = if i == j {
                0.0
            } else {
                g.weight(i, j).unwrap_or(0.0)
            };
            let ki = g.strength(i).unwrap();
            let kj = g.strength(j).unwrap();
            sum += aij - ki * kj / two_m;
        }
    }
    Ok(sum / two_m)
}
