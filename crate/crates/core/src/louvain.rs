//! Static Louvain detection, startable from any partition.
//!
//! Each level runs local moving passes until a full sweep moves nothing, then
//! aggregates communities into super-vertices and repeats. Starting from a
//! caller-supplied partition instead of singletons is how the incremental
//! updater reuses this module.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::GraphError;
use crate::graph::{VertexId, WeightedGraph};
use crate::partition::{Assignment, Community, CommunityId, Partition};

/// Default minimum modularity gain for a move to be accepted.
pub const DEFAULT_EPSILON: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LouvainConfig {
    /// Minimum accepted modularity gain per move.
    pub epsilon: f64,
    /// Shuffle the sweep order with this seed instead of ascending vertex order.
    pub shuffle_seed: Option<u64>,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig {
            epsilon: DEFAULT_EPSILON,
            shuffle_seed: None,
        }
    }
}

/// Borrowed adjacency of one aggregation level.
#[derive(Clone, Copy)]
struct Level<'a> {
    offsets: &'a [usize],
    targets: &'a [usize],
    weights: &'a [f64],
    self_weight: &'a [f64],
    strength: &'a [f64],
    two_m: f64,
}

impl Level<'_> {
    fn len(&self) -> usize {
        self.strength.len()
    }

    fn row(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }
}

/// Community labels of one level plus their maintained aggregates.
struct MoveState {
    labels: Vec<usize>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl MoveState {
    fn singletons(level: &Level) -> Self {
        MoveState {
            labels: (0..level.len()).collect(),
            alpha: level.self_weight.to_vec(),
            beta: level.strength.to_vec(),
        }
    }

    fn modularity(&self, two_m: f64) -> f64 {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(a, b)| a - b * b / two_m)
            .sum::<f64>()
            / two_m
    }

    /// Relabels non-empty communities `0..k` by first appearance and returns `k`.
    fn renumber(&mut self) -> usize {
        let mut map = vec![usize::MAX; self.alpha.len()];
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        for l in self.labels.iter_mut() {
            if map[*l] == usize::MAX {
                map[*l] = alpha.len();
                alpha.push(self.alpha[*l]);
                beta.push(self.beta[*l]);
            }
            *l = map[*l];
        }
        self.alpha = alpha;
        self.beta = beta;
        self.alpha.len()
    }
}

/// Scratch buffers for accumulating per-community edge weights.
struct Scratch {
    weight: Vec<f64>,
    touched: Vec<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            weight: vec![0.0; n],
            touched: Vec::new(),
        }
    }

    fn add(&mut self, c: usize, w: f64) {
        if self.weight[c] == 0.0 {
            self.touched.push(c);
        }
        self.weight[c] += w;
    }

    fn clear(&mut self) {
        for &c in &self.touched {
            self.weight[c] = 0.0;
        }
        self.touched.clear();
    }
}

/// Repeated sweeps until a full sweep moves nothing. Returns whether anything moved.
fn local_move(
    level: &Level,
    st: &mut MoveState,
    epsilon: f64,
    rng: &mut Option<ChaCha8Rng>,
) -> (bool, usize) {
    let two_m = level.two_m;
    let mut order: Vec<usize> = (0..level.len()).collect();
    let mut scratch = Scratch::new(st.alpha.len().max(level.len()));
    let mut any = false;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        if let Some(r) = rng.as_mut() {
            order.shuffle(r);
        }
        let mut moved = false;
        for &v in &order {
            let k_v = level.strength[v];
            let c_old = st.labels[v];
            for (u, w) in level.row(v) {
                scratch.add(st.labels[u], w);
            }
            let w_old = scratch.weight[c_old];
            st.beta[c_old] -= k_v;
            st.alpha[c_old] -= 2.0 * w_old + level.self_weight[v];
            let gain_old = w_old - st.beta[c_old] * k_v / two_m;

            let mut best: Option<(usize, f64)> = None;
            for &c in &scratch.touched {
                if c == c_old {
                    continue;
                }
                let gain = scratch.weight[c] - st.beta[c] * k_v / two_m;
                best = match best {
                    Some((bc, bg)) if bg > gain || (bg == gain && bc < c) => Some((bc, bg)),
                    _ => Some((c, gain)),
                };
            }
            let target = match best {
                Some((c, gain)) if 2.0 * (gain - gain_old) / two_m > epsilon => c,
                _ => c_old,
            };
            st.beta[target] += k_v;
            st.alpha[target] += 2.0 * scratch.weight[target] + level.self_weight[v];
            if target != c_old {
                st.labels[v] = target;
                moved = true;
            }
            scratch.clear();
        }
        if !moved {
            return (any, sweeps);
        }
        any = true;
    }
}

/// Owned adjacency of an aggregated level.
#[derive(Clone, Debug, Default)]
struct OwnedLevel {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    self_weight: Vec<f64>,
    strength: Vec<f64>,
    two_m: f64,
}

impl OwnedLevel {
    fn view(&self) -> Level<'_> {
        Level {
            offsets: &self.offsets,
            targets: &self.targets,
            weights: &self.weights,
            self_weight: &self.self_weight,
            strength: &self.strength,
            two_m: self.two_m,
        }
    }
}

/// Collapses each of the `k` communities in `labels` into one super-vertex.
fn aggregate(level: &Level, labels: &[usize], alpha: &[f64], beta: &[f64]) -> OwnedLevel {
    let k = alpha.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (v, &c) in labels.iter().enumerate() {
        members[c].push(v);
    }
    let mut out = OwnedLevel {
        offsets: Vec::with_capacity(k + 1),
        self_weight: alpha.to_vec(),
        strength: beta.to_vec(),
        two_m: level.two_m,
        ..Default::default()
    };
    out.offsets.push(0);
    let mut scratch = Scratch::new(k);
    for (c, vs) in members.iter().enumerate() {
        for &v in vs {
            for (u, w) in level.row(v) {
                let cu = labels[u];
                if cu != c {
                    scratch.add(cu, w);
                }
            }
        }
        scratch.touched.sort_unstable();
        for &cu in &scratch.touched {
            out.targets.push(cu);
            out.weights.push(scratch.weight[cu]);
        }
        scratch.clear();
        out.offsets.push(out.targets.len());
    }
    out
}

/// Dense community indices for `assignment` over `g`, ordered by `CommunityId`.
fn dense_labels(
    g: &WeightedGraph,
    assignment: &Assignment,
) -> Result<(Vec<usize>, Vec<CommunityId>), GraphError> {
    if assignment.len() != g.vertex_count() {
        for v in assignment.vertices() {
            if !g.contains(v) {
                return Err(GraphError::UnknownVertex(v));
            }
        }
    }
    let mut raw = Vec::with_capacity(g.vertex_count());
    for &v in g.vertices() {
        raw.push(assignment.get(v).ok_or(GraphError::UnassignedVertex(v))?);
    }
    let mut ids = raw.clone();
    ids.sort_unstable();
    ids.dedup();
    let labels = raw
        .iter()
        .map(|c| ids.binary_search(c).expect("id collected above"))
        .collect();
    Ok((labels, ids))
}

fn aggregates_from_scan(level: &Level, labels: &[usize], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut alpha = vec![0.0; k];
    let mut beta = vec![0.0; k];
    for (v, &c) in labels.iter().enumerate() {
        beta[c] += level.strength[v];
        alpha[c] += level.self_weight[v];
        for (u, w) in level.row(v) {
            if labels[u] == c {
                alpha[c] += w;
            }
        }
    }
    (alpha, beta)
}

fn level_zero<'a>(g: &'a WeightedGraph, zeros: &'a [f64]) -> Level<'a> {
    Level {
        offsets: g.offsets(),
        targets: g.targets(),
        weights: g.raw_weights(),
        self_weight: zeros,
        strength: g.strengths(),
        two_m: 2.0 * g.total_weight(),
    }
}

/// Outcome of a full Louvain run.
#[derive(Clone, Debug)]
pub struct LouvainRun {
    pub partition: Partition,
    /// Modularity of the starting partition followed by the value after every pass.
    pub pass_modularity: Vec<f64>,
    /// Number of levels processed (1 means no aggregation took place).
    pub levels: usize,
    /// Vertex sweeps performed over all levels.
    pub sweeps: usize,
}

/// Louvain detection from singletons (`initial = None`) or from `initial`.
pub fn louvain(
    g: &WeightedGraph,
    initial: Option<&Assignment>,
    cfg: &LouvainConfig,
) -> Result<Partition, GraphError> {
    louvain_traced(g, initial, cfg).map(|r| r.partition)
}

/// Like [`louvain`], also returning the per-pass modularity trace.
pub fn louvain_traced(
    g: &WeightedGraph,
    initial: Option<&Assignment>,
    cfg: &LouvainConfig,
) -> Result<LouvainRun, GraphError> {
    let start = match initial {
        None => None,
        Some(a) => {
            let (labels, ids) = dense_labels(g, a)?;
            Some((labels, ids.len()))
        }
    };
    louvain_dense(g, start, cfg)
}

/// Louvain from dense labels `0..k` in vertex-index order, where a smaller
/// label wins gain ties. Labels may leave some of `0..k` unused.
pub(crate) fn louvain_dense(
    g: &WeightedGraph,
    start: Option<(Vec<usize>, usize)>,
    cfg: &LouvainConfig,
) -> Result<LouvainRun, GraphError> {
    if g.total_weight() <= 0.0 {
        return Err(GraphError::EmptyGraph);
    }
    let n = g.vertex_count();
    let zeros = vec![0.0; n];
    let base = level_zero(g, &zeros);
    let mut rng = cfg.shuffle_seed.map(ChaCha8Rng::seed_from_u64);

    let mut st = match start {
        None => MoveState::singletons(&base),
        Some((labels, k)) => {
            let (alpha, beta) = aggregates_from_scan(&base, &labels, k);
            MoveState {
                labels,
                alpha,
                beta,
            }
        }
    };
    let mut trace = vec![st.modularity(base.two_m)];
    let mut to_level: Vec<usize> = (0..n).collect();
    let mut owned: Option<OwnedLevel> = None;
    let mut levels = 0;
    let mut sweeps = 0;

    loop {
        levels += 1;
        let level = owned.as_ref().map_or(base, OwnedLevel::view);
        sweeps += local_move(&level, &mut st, cfg.epsilon, &mut rng).1;
        let q = st.modularity(level.two_m);
        debug_assert!(q >= trace[trace.len() - 1] - 1e-9, "modularity decreased");
        trace.push(q);
        let k = st.renumber();
        if k == level.len() {
            break;
        }
        let next = aggregate(&level, &st.labels, &st.alpha, &st.beta);
        for x in to_level.iter_mut() {
            *x = st.labels[*x];
        }
        st = MoveState::singletons(&next.view());
        owned = Some(next);
    }

    let final_labels: Vec<usize> = to_level.iter().map(|&x| st.labels[x]).collect();
    let partition = unfold(g, &final_labels, &st.alpha, &st.beta);
    Ok(LouvainRun {
        partition,
        pass_modularity: trace,
        levels,
        sweeps,
    })
}

/// Builds the output partition, numbering communities by first appearance
/// over ascending vertex id unless `id_of` maps them otherwise.
fn unfold(g: &WeightedGraph, labels: &[usize], alpha: &[f64], beta: &[f64]) -> Partition {
    let mut number = vec![usize::MAX; alpha.len()];
    let mut communities: Vec<Community> = Vec::new();
    let mut ids = Vec::with_capacity(labels.len());
    for (&v, &l) in g.vertices().iter().zip(labels) {
        if number[l] == usize::MAX {
            number[l] = communities.len();
            communities.push(Community {
                members: Vec::new(),
                alpha: alpha[l],
                beta: beta[l],
            });
        }
        communities[number[l]].members.push(v);
        ids.push(CommunityId(number[l] as u64));
    }
    let assignment = g.vertices().iter().copied().zip(ids).collect();
    let communities = communities
        .into_iter()
        .enumerate()
        .map(|(i, c)| (CommunityId(i as u64), c))
        .collect();
    Partition::from_parts(assignment, communities)
}

/// One level of local moving on the original graph, starting from `p`.
///
/// Community ids of `p` are preserved; emptied communities disappear.
pub fn local_moving_pass(g: &WeightedGraph, p: &Partition, epsilon: f64) -> (Partition, bool) {
    let n = g.vertex_count();
    let zeros = vec![0.0; n];
    let level = level_zero(g, &zeros);
    let (labels, ids) = dense_labels(g, p.assignment()).expect("partition must cover the graph");
    let mut alpha = Vec::with_capacity(ids.len());
    let mut beta = Vec::with_capacity(ids.len());
    for c in &ids {
        let x = p.community(*c).expect("community present");
        alpha.push(x.alpha);
        beta.push(x.beta);
    }
    let mut st = MoveState {
        labels,
        alpha,
        beta,
    };
    if level.two_m <= 0.0 {
        return (p.clone(), false);
    }
    let (moved, _) = local_move(&level, &mut st, epsilon, &mut None);

    let mut assignment = Assignment::new();
    let mut communities: BTreeMap<CommunityId, Community> = BTreeMap::new();
    for (&v, &l) in g.vertices().iter().zip(&st.labels) {
        let id = ids[l];
        assignment.insert(v, id);
        communities
            .entry(id)
            .or_insert_with(|| Community {
                members: Vec::new(),
                alpha: st.alpha[l],
                beta: st.beta[l],
            })
            .members
            .push(v);
    }
    (Partition::from_parts(assignment, communities), moved)
}

/// A graph whose vertices are the communities of a source partition.
///
/// Each super-vertex carries a self weight equal to its community's `alpha`
/// (twice the internal edge weight), so modularity is preserved.
#[derive(Clone, Debug)]
pub struct CompressedGraph {
    level: OwnedLevel,
    communities: Vec<CommunityId>,
    vertices: Vec<VertexId>,
    super_of: Vec<usize>,
}

/// Aggregates `g` by the communities of `p`, one super-vertex per community in
/// ascending `CommunityId` order.
pub fn compress(g: &WeightedGraph, p: &Partition) -> CompressedGraph {
    let zeros = vec![0.0; g.vertex_count()];
    let base = level_zero(g, &zeros);
    let (labels, ids) = dense_labels(g, p.assignment()).expect("partition must cover the graph");
    let alpha: Vec<f64> = ids.iter().map(|c| p.community(*c).unwrap().alpha).collect();
    let beta: Vec<f64> = ids.iter().map(|c| p.community(*c).unwrap().beta).collect();
    CompressedGraph {
        level: aggregate(&base, &labels, &alpha, &beta),
        communities: ids,
        vertices: g.vertices().to_vec(),
        super_of: labels,
    }
}

impl CompressedGraph {
    pub fn super_vertex_count(&self) -> usize {
        self.communities.len()
    }

    /// Source community represented by super-vertex `s`.
    pub fn community(&self, s: usize) -> CommunityId {
        self.communities[s]
    }

    pub fn super_vertex_of(&self, v: VertexId) -> Option<usize> {
        self.vertices
            .binary_search(&v)
            .ok()
            .map(|i| self.super_of[i])
    }

    pub fn self_weight(&self, s: usize) -> f64 {
        self.level.self_weight[s]
    }

    pub fn strength(&self, s: usize) -> f64 {
        self.level.strength[s]
    }

    /// Inter-community edges once each as `(a, b, w)` with `a < b`.
    pub fn super_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.super_vertex_count()).flat_map(move |a| {
            self.level
                .view()
                .row(a)
                .filter(move |&(b, _)| b > a)
                .map(move |(b, w)| (a, b, w))
                .collect::<Vec<_>>()
        })
    }

    pub fn super_edge_weight(&self, a: usize, b: usize) -> Option<f64> {
        self.level
            .view()
            .row(a)
            .find(|&(x, _)| x == b)
            .map(|(_, w)| w)
    }

    /// Half the self weights plus the super-edge weights; equals `m` of the source graph.
    pub fn total_weight(&self) -> f64 {
        self.level.self_weight.iter().sum::<f64>() / 2.0
            + self.super_edges().map(|(_, _, w)| w).sum::<f64>()
    }

    /// Modularity with every super-vertex in its own community.
    pub fn identity_modularity(&self) -> f64 {
        let two_m = self.level.two_m;
        self.level
            .self_weight
            .iter()
            .zip(&self.level.strength)
            .map(|(a, k)| a - k * k / two_m)
            .sum::<f64>()
            / two_m
    }

    /// Local moving over super-vertices from the given labels.
    pub fn local_moving_pass(&self, labels: &[usize], epsilon: f64) -> (Vec<usize>, bool) {
        let view = self.level.view();
        let k = labels.iter().max().map_or(0, |&x| x + 1).max(view.len());
        let (alpha, beta) = aggregates_from_scan(&view, labels, k);
        let mut st = MoveState {
            labels: labels.to_vec(),
            alpha,
            beta,
        };
        let (moved, _) = local_move(&view, &mut st, epsilon, &mut None);
        (st.labels, moved)
    }
}
