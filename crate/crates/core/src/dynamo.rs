//! Incremental community maintenance across snapshots.
//!
//! An update classifies every change of a snapshot delta, decides which
//! communities to break into singletons and which vertex pairs to seed as
//! fresh two-vertex communities, and then resumes Louvain from that
//! intermediate partition on the new snapshot.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{DynamoError, GraphError};
use crate::graph::{EdgeChange, GraphDelta, VertexId, WeightedGraph};
use crate::louvain::{louvain_dense, LouvainConfig};
use crate::partition::{Assignment, CommunityId, Partition};

/// Refinement threshold that never fires.
pub const REFINE_DISABLED: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChangeKind {
    /// Edge addition or weight increase inside one community.
    IceaWi,
    /// Edge addition or weight increase between two communities.
    CceaWi,
    /// Edge deletion or weight decrease inside one community.
    IcedWd,
    /// Edge deletion or weight decrease between two communities.
    CcedWd,
    VertexAdd,
    VertexDel,
}

/// One element of a [`GraphDelta`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Change {
    AddVertex(VertexId),
    RemoveVertex(VertexId),
    Edge(EdgeChange),
}

/// Kind of `change` relative to the pre-change graph and partition.
///
/// Edge changes touching a vertex added or removed by `d` take the vertex kind.
pub fn classify(
    g_t: &WeightedGraph,
    p_t: &Partition,
    d: &GraphDelta,
    change: &Change,
) -> Result<ChangeKind, GraphError> {
    let known = |v: VertexId| {
        if g_t.contains(v) || d.added_vertices.contains(&v) {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(v))
        }
    };
    match *change {
        Change::AddVertex(v) => {
            if g_t.contains(v) {
                Err(GraphError::DuplicateVertex(v))
            } else {
                Ok(ChangeKind::VertexAdd)
            }
        }
        Change::RemoveVertex(v) => {
            known(v)?;
            Ok(ChangeKind::VertexDel)
        }
        Change::Edge(e) => {
            known(e.u)?;
            known(e.v)?;
            if d.removed_vertices.contains(&e.u) || d.removed_vertices.contains(&e.v) {
                return Ok(ChangeKind::VertexDel);
            }
            if d.added_vertices.contains(&e.u) || d.added_vertices.contains(&e.v) {
                return Ok(ChangeKind::VertexAdd);
            }
            let cu = p_t
                .community_of(e.u)
                .ok_or(GraphError::UnassignedVertex(e.u))?;
            let cv = p_t
                .community_of(e.v)
                .ok_or(GraphError::UnassignedVertex(e.v))?;
            Ok(match (cu == cv, e.delta_w > 0.0) {
                (true, true) => ChangeKind::IceaWi,
                (false, true) => ChangeKind::CceaWi,
                (true, false) => ChangeKind::IcedWd,
                (false, false) => ChangeKind::CcedWd,
            })
        }
    }
}

/// Communities to break into singletons and vertex pairs to seed together.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitPlan {
    pub dissolve: BTreeSet<CommunityId>,
    /// Unordered pairs stored with the smaller id first.
    pub pair_seeds: BTreeSet<(VertexId, VertexId)>,
}

impl InitPlan {
    pub fn is_empty(&self) -> bool {
        self.dissolve.is_empty() && self.pair_seeds.is_empty()
    }

    pub fn has_pair(&self, a: VertexId, b: VertexId) -> bool {
        self.pair_seeds.contains(&(a.min(b), a.max(b)))
    }
}

/// Community of every vertex of `g`, by vertex index.
fn vertex_labels(g: &WeightedGraph, p: &Partition) -> Result<Vec<CommunityId>, GraphError> {
    let mut it = p.assignment().iter();
    g.vertices()
        .iter()
        .map(|&v| match it.next() {
            Some((u, c)) if u == v => Ok(c),
            _ => Err(GraphError::UnassignedVertex(v)),
        })
        .collect()
}

/// Total weight of edges between communities `a` and `b`, scanning the smaller one.
fn cross_weight(
    g: &WeightedGraph,
    labels: &[CommunityId],
    p: &Partition,
    a: CommunityId,
    b: CommunityId,
) -> f64 {
    let (ca, cb) = (p.community(a).unwrap(), p.community(b).unwrap());
    let (scan, other) = if ca.members.len() <= cb.members.len() {
        (ca, b)
    } else {
        (cb, a)
    };
    let mut sum = 0.0;
    for &v in &scan.members {
        let (targets, weights) = g.row(g.index_of(v).unwrap());
        for (&u, &w) in targets.iter().zip(weights) {
            if labels[u] == other {
                sum += w;
            }
        }
    }
    sum
}

/// Weight between each requested pair of distinct communities, in one pass
/// over the edges leaving the communities involved.
fn cross_weights_for(
    g: &WeightedGraph,
    p: &Partition,
    pairs: &BTreeSet<(CommunityId, CommunityId)>,
) -> Result<HashMap<(CommunityId, CommunityId), f64>, GraphError> {
    let involved: Vec<CommunityId> = pairs
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let r = involved.len();
    let slot = |c: CommunityId| involved.binary_search(&c).ok();
    let slots: Vec<Option<usize>> = vertex_labels(g, p)?.into_iter().map(slot).collect();
    let mut sums = vec![0.0; r * r];
    for (i, a) in slots.iter().enumerate() {
        let Some(a) = *a else { continue };
        let (targets, weights) = g.row(i);
        for (&u, &w) in targets.iter().zip(weights) {
            if let Some(b) = slots[u] {
                sums[a * r + b] += w;
            }
        }
    }
    Ok(pairs
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (slot(a).unwrap(), slot(b).unwrap());
            ((a, b), sums[x * r + y])
        })
        .collect())
}

fn two_communities(
    p: &Partition,
    i: VertexId,
    j: VertexId,
) -> Result<(CommunityId, CommunityId), DynamoError> {
    let ci = p.community_of(i).ok_or(GraphError::UnknownVertex(i))?;
    let cj = p.community_of(j).ok_or(GraphError::UnknownVertex(j))?;
    if ci == cj {
        return Err(DynamoError::SameCommunity(i, j));
    }
    Ok((ci, cj))
}

/// `(delta1, delta2)` of the merge criterion for the communities of `i` and `j`.
fn merge_terms(m: f64, cross: f64, beta_i: f64, beta_j: f64) -> (f64, f64) {
    let alpha2 = -2.0 * cross;
    let beta2 = beta_i + beta_j;
    (2.0 * m - alpha2 - beta2, m * alpha2 + beta_i * beta_j)
}

/// Smallest weight increase on a new edge between `c_i` and `c_j` above
/// which merging the two communities beats keeping them apart.
pub fn ccea_merge_threshold(
    g_t: &WeightedGraph,
    p_t: &Partition,
    i: VertexId,
    j: VertexId,
) -> Result<f64, DynamoError> {
    let (ci, cj) = two_communities(p_t, i, j)?;
    let m = g_t.total_weight();
    if m <= 0.0 {
        return Err(GraphError::EmptyGraph.into());
    }
    let beta_i = p_t.community(ci).unwrap().beta;
    let beta_j = p_t.community(cj).unwrap().beta;
    let labels = vertex_labels(g_t, p_t)?;
    let cross = cross_weight(g_t, &labels, p_t, ci, cj);
    let (d1, d2) = merge_terms(m, cross, beta_i, beta_j);
    Ok(0.5 * (-d1 + (d1 * d1 + 4.0 * d2).max(0.0).sqrt()))
}

/// Weight increase inside `c_p` above which splitting community `c_i` into
/// `c_p` and the rest beats keeping it whole, when the denominator
/// `2 beta_q - alpha_1` is positive (the direction flips when it is negative).
pub fn bisplit_threshold(
    g: &WeightedGraph,
    p: &Partition,
    c_i: CommunityId,
    c_p: &BTreeSet<VertexId>,
) -> Result<f64, DynamoError> {
    let comm = p.community(c_i).ok_or(DynamoError::InvalidSubset(c_i))?;
    if c_p.is_empty()
        || c_p.len() >= comm.members.len()
        || c_p.iter().any(|&v| p.community_of(v) != Some(c_i))
    {
        return Err(DynamoError::InvalidSubset(c_i));
    }
    let m = g.total_weight();
    let mut beta_p = 0.0;
    let mut cross = 0.0;
    for &v in c_p {
        beta_p += g.strength(v).ok_or(GraphError::UnknownVertex(v))?;
        cross += g
            .neighbors(v)
            .filter(|&(u, _)| p.community_of(u) == Some(c_i) && !c_p.contains(&u))
            .map(|(_, w)| w)
            .sum::<f64>();
    }
    let beta_q = comm.beta - beta_p;
    let alpha1 = 2.0 * cross;
    let den = 2.0 * beta_q - alpha1;
    if den.abs() <= 1e-12 * (1.0 + beta_q.abs()) {
        return Err(DynamoError::DegenerateDenominator);
    }
    Ok((m * alpha1 - beta_p * beta_q) / den)
}

struct PlanBuilder {
    plan: InitPlan,
    partner: BTreeMap<VertexId, VertexId>,
}

impl PlanBuilder {
    fn seed(&mut self, a: VertexId, b: VertexId) {
        for x in [a, b] {
            if let Some(old) = self.partner.remove(&x) {
                self.partner.remove(&old);
                self.plan.pair_seeds.remove(&(x.min(old), x.max(old)));
            }
        }
        self.partner.insert(a, b);
        self.partner.insert(b, a);
        self.plan.pair_seeds.insert((a.min(b), a.max(b)));
    }

    fn dissolve_around(&mut self, g_t: &WeightedGraph, p_t: &Partition, v: VertexId) {
        self.plan.dissolve.extend(p_t.community_of(v));
        for (u, _) in g_t.neighbors(v) {
            self.plan.dissolve.extend(p_t.community_of(u));
        }
    }
}

fn check_consistency(
    g_t1: &WeightedGraph,
    g_t: &WeightedGraph,
    p_t: &Partition,
    d: &GraphDelta,
) -> Result<(), DynamoError> {
    let bad = |msg: String| Err(DynamoError::InconsistentSnapshots(msg));
    if p_t.vertex_count() != g_t.vertex_count() {
        return bad("partition does not cover the previous snapshot".into());
    }
    for &v in &d.added_vertices {
        if g_t.contains(v) || !g_t1.contains(v) {
            return bad(format!("added vertex {v}"));
        }
    }
    for &v in &d.removed_vertices {
        if !g_t.contains(v) || g_t1.contains(v) {
            return bad(format!("removed vertex {v}"));
        }
    }
    if g_t.vertex_count() + d.added_vertices.len() != g_t1.vertex_count() + d.removed_vertices.len()
    {
        return bad("vertex counts".into());
    }
    for e in &d.edge_changes {
        for x in [e.u, e.v] {
            if !g_t1.contains(x) && !d.removed_vertices.contains(&x) {
                return bad(format!("edge endpoint {x}"));
            }
        }
    }
    Ok(())
}

/// Net weight change per vertex pair, in order of first appearance, skipping
/// pairs that touch an added or removed vertex.
fn net_edge_changes(d: &GraphDelta) -> Vec<(VertexId, VertexId, f64)> {
    let mut index: HashMap<(VertexId, VertexId), usize> = HashMap::new();
    let mut out: Vec<(VertexId, VertexId, f64)> = Vec::new();
    for e in &d.edge_changes {
        let touched = [e.u, e.v]
            .iter()
            .any(|x| d.added_vertices.contains(x) || d.removed_vertices.contains(x));
        if touched {
            continue;
        }
        let key = (e.u.min(e.v), e.u.max(e.v));
        match index.get(&key) {
            Some(&i) => out[i].2 += e.delta_w,
            None => {
                index.insert(key, out.len());
                out.push((key.0, key.1, e.delta_w));
            }
        }
    }
    out
}

/// Builds the initialization plan for moving `p_t` from `g_t` onto `g_t1`.
///
/// Vertex removals come first, then vertex additions (both ascending by id),
/// then edge changes in delta order. Dissolved communities accumulate; a later
/// pair seed replaces any earlier pair sharing a vertex.
pub fn init(
    g_t1: &WeightedGraph,
    g_t: &WeightedGraph,
    p_t: &Partition,
    d: &GraphDelta,
) -> Result<InitPlan, DynamoError> {
    check_consistency(g_t1, g_t, p_t, d)?;
    let mut b = PlanBuilder {
        plan: InitPlan::default(),
        partner: BTreeMap::new(),
    };

    for &k in &d.removed_vertices {
        b.dissolve_around(g_t, p_t, k);
    }

    for &k in &d.added_vertices {
        let mut best: Option<(VertexId, f64)> = None;
        for (l, w) in g_t1.neighbors(k) {
            b.plan.dissolve.extend(p_t.community_of(l));
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((l, w));
            }
        }
        if let Some((l, _)) = best {
            b.seed(k, l);
        }
    }

    let m = g_t.total_weight();
    let changes = net_edge_changes(d);
    let mut labelled = Vec::with_capacity(changes.len());
    let mut wanted = BTreeSet::new();
    for (i, j, dw) in changes {
        if dw == 0.0 {
            continue;
        }
        let ci = p_t.community_of(i).ok_or(GraphError::UnknownVertex(i))?;
        let cj = p_t.community_of(j).ok_or(GraphError::UnknownVertex(j))?;
        if ci != cj && dw > 0.0 {
            wanted.insert((ci.min(cj), ci.max(cj)));
        }
        labelled.push((i, j, dw, ci, cj));
    }
    let cross_weights = if wanted.is_empty() {
        HashMap::new()
    } else {
        cross_weights_for(g_t, p_t, &wanted)?
    };
    for (i, j, dw, ci, cj) in labelled {
        match (ci == cj, dw > 0.0) {
            (true, true) => {
                b.plan.dissolve.insert(ci);
                b.seed(i, j);
            }
            (true, false) => {
                b.dissolve_around(g_t, p_t, i);
                b.dissolve_around(g_t, p_t, j);
            }
            (false, true) => {
                let cross = cross_weights[&(ci.min(cj), ci.max(cj))];
                let beta_i = p_t.community(ci).unwrap().beta;
                let beta_j = p_t.community(cj).unwrap().beta;
                let (d1, d2) = merge_terms(m, cross, beta_i, beta_j);
                if 2.0 * dw + d1 > (d1 * d1 + 4.0 * d2).max(0.0).sqrt() {
                    b.plan.dissolve.insert(ci);
                    b.plan.dissolve.insert(cj);
                    b.seed(i, j);
                }
            }
            (false, false) => {}
        }
    }
    Ok(b.plan)
}

/// Dense starting labels over the vertices of `g_t1`: `p_t` without removed
/// vertices, dissolved communities exploded into singletons, pair seeds as
/// fresh communities and uncovered new vertices as singletons. Surviving
/// communities keep the order of their ids and precede all fresh labels.
fn intermediate_labels(
    g_t1: &WeightedGraph,
    p_t: &Partition,
    plan: &InitPlan,
) -> (Vec<usize>, usize) {
    let ids: Vec<CommunityId> = p_t.communities().map(|(c, _)| c).collect();
    let mut next = ids.len();
    let mut labels = vec![usize::MAX; g_t1.vertex_count()];
    let mut old = p_t.assignment().iter().peekable();
    for (i, &v) in g_t1.vertices().iter().enumerate() {
        while old.next_if(|&(u, _)| u < v).is_some() {}
        if let Some((_, c)) = old.next_if(|&(u, _)| u == v) {
            labels[i] = if plan.dissolve.contains(&c) {
                next += 1;
                next - 1
            } else {
                ids.binary_search(&c).expect("community of p_t")
            };
        }
    }
    for &(a, b) in &plan.pair_seeds {
        for x in [a, b] {
            labels[g_t1.index_of(x).expect("seed vertex in g_t1")] = next;
        }
        next += 1;
    }
    for l in labels.iter_mut().filter(|l| **l == usize::MAX) {
        *l = next;
        next += 1;
    }
    (labels, next)
}

/// The partition handed to Louvain by [`dynamo_update`].
pub fn intermediate_assignment(
    g_t1: &WeightedGraph,
    p_t: &Partition,
    plan: &InitPlan,
) -> Assignment {
    let (labels, _) = intermediate_labels(g_t1, p_t, plan);
    g_t1.vertices()
        .iter()
        .zip(labels)
        .map(|(&v, l)| (v, CommunityId(l as u64)))
        .collect()
}

/// Community structure of `g_t1` derived from the structure `p_t` of `g_t`.
pub fn dynamo_update(
    g_t1: &WeightedGraph,
    g_t: &WeightedGraph,
    p_t: &Partition,
    d: &GraphDelta,
    cfg: &LouvainConfig,
) -> Result<Partition, DynamoError> {
    let plan = init(g_t1, g_t, p_t, d)?;
    let start = intermediate_labels(g_t1, p_t, &plan);
    Ok(louvain_dense(g_t1, Some(start), cfg)?.partition)
}

/// Whether to fall back to full detection because modularity sank below `threshold`.
pub fn refine_check(q_current: f64, q_threshold: f64) -> bool {
    q_current < q_threshold
}
