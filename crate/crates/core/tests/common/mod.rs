#![allow(dead_code)]

pub mod suites;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use dynamo_core::{Assignment, CommunityId, Partition, VertexId, WeightedGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v(x: u64) -> VertexId {
    VertexId(x)
}

/// Assignment of vertices `0..labels.len()`.
pub fn labels(ls: &[u64]) -> Assignment {
    ls.iter()
        .enumerate()
        .map(|(i, &c)| (VertexId(i as u64), CommunityId(c)))
        .collect()
}

pub fn partition(g: &WeightedGraph, a: Assignment) -> Partition {
    Partition::rebuild(g, a).unwrap()
}

/// Modularity by summing `A_ij - k_i k_j / 2m` over all same-community ordered pairs.
pub fn pairwise_q(g: &WeightedGraph, a: &Assignment) -> f64 {
    let vs = g.vertices();
    let k: Vec<f64> = vs.iter().map(|&x| g.strength(x).unwrap()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for (i, &x) in vs.iter().enumerate() {
        for (j, &y) in vs.iter().enumerate() {
            if a.get(x) == a.get(y) {
                let w = if i == j {
                    0.0
                } else {
                    g.weight(x, y).unwrap_or(0.0)
                };
                q += w - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Edge list of a random graph on `n` vertices with edge probability `p`
/// and weights in `[1, wmax]` (unit weights when `wmax <= 1`).
pub fn random_edges(r: &mut ChaCha8Rng, n: u64, p: f64, wmax: f64) -> Vec<(u64, u64, f64)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(p) {
                let w = if wmax > 1.0 {
                    r.random_range(1.0..wmax)
                } else {
                    1.0
                };
                out.push((i, j, w));
            }
        }
    }
    out
}

/// Random connected graph on `n` vertices: a random spanning tree plus extra edges.
pub fn random_connected(r: &mut ChaCha8Rng, n: u64, p: f64, wmax: f64) -> WeightedGraph {
    let mut order: Vec<u64> = (0..n).collect();
    order.shuffle(r);
    let mut edges: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    let weight = |r: &mut ChaCha8Rng| {
        if wmax > 1.0 {
            r.random_range(1.0..wmax)
        } else {
            1.0
        }
    };
    for k in 1..order.len() {
        let parent = order[r.random_range(0..k)];
        let (a, b) = (order[k].min(parent), order[k].max(parent));
        let w = weight(r);
        edges.insert((a, b), w);
    }
    for (a, b, _) in random_edges(r, n, p, 1.0) {
        if let Entry::Vacant(slot) = edges.entry((a, b)) {
            slot.insert(weight(r));
        }
    }
    WeightedGraph::from_edges(edges.into_iter().map(|((a, b), w)| (a, b, w))).unwrap()
}

/// Random assignment of the vertices of `g` into at most `k` labels.
pub fn random_assignment(r: &mut ChaCha8Rng, g: &WeightedGraph, k: u64) -> Assignment {
    g.vertices()
        .iter()
        .map(|&x| (x, CommunityId(r.random_range(0..k))))
        .collect()
}

/// Every set partition of `vs` as label vectors (restricted growth strings).
pub fn all_partitions(n: usize) -> Vec<Vec<u64>> {
    fn go(i: usize, n: usize, used: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..=used {
            cur.push(c);
            go(i + 1, n, used.max(c + 1), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, 0, &mut Vec::new(), &mut out);
    out
}

/// Best modularity over every partition of `g` by brute force.
pub fn brute_best(g: &WeightedGraph) -> (Assignment, f64) {
    let vs = g.vertices();
    let mut best = (Assignment::new(), f64::NEG_INFINITY);
    for ls in all_partitions(vs.len()) {
        let a: Assignment = vs
            .iter()
            .zip(&ls)
            .map(|(&x, &c)| (x, CommunityId(c)))
            .collect();
        let q = pairwise_q(g, &a);
        if q > best.1 + 1e-12 {
            best = (a, q);
        }
    }
    best
}

/// A random delta valid for `g`: vertex additions and removals, weight
/// increases, partial and full decreases, and new edges.
pub fn random_delta(r: &mut ChaCha8Rng, g: &WeightedGraph) -> dynamo_core::GraphDelta {
    use dynamo_core::{EdgeChange, GraphDelta};
    let mut d = GraphDelta::default();
    let vs = g.vertices().to_vec();
    let next = vs.iter().map(|x| x.0 + 1).max().unwrap_or(0);
    for k in 0..r.random_range(0..3u64) {
        d.added_vertices.insert(VertexId(next + k));
    }
    for &x in &vs {
        if vs.len() > 3 && r.random_bool(0.1) {
            d.removed_vertices.insert(x);
        }
    }
    let alive: Vec<VertexId> = vs
        .iter()
        .copied()
        .filter(|x| !d.removed_vertices.contains(x))
        .chain(d.added_vertices.iter().copied())
        .collect();
    for (a, b, w) in g.edges() {
        if d.removed_vertices.contains(&a) || d.removed_vertices.contains(&b) {
            continue;
        }
        match r.random_range(0..6) {
            0 => d.edge_changes.push(EdgeChange::new(a, b, -w)),
            1 => d.edge_changes.push(EdgeChange::new(a, b, -w / 2.0)),
            2 => d.edge_changes.push(EdgeChange::new(b, a, 0.75)),
            _ => {}
        }
    }
    if alive.len() >= 2 {
        for _ in 0..r.random_range(0..4) {
            let a = alive[r.random_range(0..alive.len())];
            let b = alive[r.random_range(0..alive.len())];
            if a != b {
                d.edge_changes
                    .push(EdgeChange::new(a, b, r.random_range(0.5..2.0)));
            }
        }
    }
    d
}

/// Textbook Louvain on a dense matrix: ascending sweeps, gains recomputed
/// from scratch, ties to the smaller label, communities renumbered by first
/// appearance before aggregation. Returns the final label of every vertex
/// of `g` in index order.
pub fn reference_louvain(g: &WeightedGraph, eps: f64) -> Vec<usize> {
    let vs = g.vertices();
    let n = vs.len();
    let mut w = vec![vec![0.0; n]; n];
    for (i, &x) in vs.iter().enumerate() {
        for (j, &y) in vs.iter().enumerate() {
            w[i][j] = g.weight(x, y).unwrap_or(0.0);
        }
    }
    let mut to_level: Vec<usize> = (0..n).collect();
    loop {
        let n = w.len();
        let k: Vec<f64> = (0..n).map(|i| w[i].iter().sum()).collect();
        let two_m: f64 = k.iter().sum();
        let mut lab: Vec<usize> = (0..n).collect();
        loop {
            let mut moved = false;
            for v in 0..n {
                let link = |c: usize| -> f64 {
                    (0..n)
                        .filter(|&u| u != v && lab[u] == c && w[v][u] > 0.0)
                        .map(|u| w[v][u])
                        .sum()
                };
                let tot = |c: usize| -> f64 {
                    (0..n)
                        .filter(|&u| u != v && lab[u] == c)
                        .map(|u| k[u])
                        .sum()
                };
                let own = lab[v];
                let gain_old = link(own) - tot(own) * k[v] / two_m;
                let mut cands: Vec<usize> = (0..n)
                    .filter(|&u| u != v && w[v][u] > 0.0 && lab[u] != own)
                    .map(|u| lab[u])
                    .collect();
                cands.sort();
                cands.dedup();
                let mut best: Option<(usize, f64)> = None;
                for c in cands {
                    let gain = link(c) - tot(c) * k[v] / two_m;
                    if best.is_none_or(|(_, bg)| gain > bg) {
                        best = Some((c, gain));
                    }
                }
                if let Some((c, gain)) = best {
                    if 2.0 * (gain - gain_old) / two_m > eps {
                        lab[v] = c;
                        moved = true;
                    }
                }
            }
            if !moved {
                break;
            }
        }
        let mut map: BTreeMap<usize, usize> = BTreeMap::new();
        let mut dense = Vec::with_capacity(n);
        for &l in &lab {
            let next = map.len();
            dense.push(*map.entry(l).or_insert(next));
        }
        let kk = map.len();
        for x in to_level.iter_mut() {
            *x = dense[*x];
        }
        if kk == n {
            return to_level;
        }
        let mut agg = vec![vec![0.0; kk]; kk];
        for i in 0..n {
            for j in 0..n {
                agg[dense[i]][dense[j]] += w[i][j];
            }
        }
        w = agg;
    }
}

/// Adjacency matrix view of a graph over vertex indices, for brute-force scans.
pub struct Dense {
    pub w: Vec<Vec<f64>>,
    pub k: Vec<f64>,
    pub two_m: f64,
}

impl Dense {
    pub fn new(g: &WeightedGraph) -> Dense {
        let vs = g.vertices();
        let w: Vec<Vec<f64>> = vs
            .iter()
            .map(|&x| vs.iter().map(|&y| g.weight(x, y).unwrap_or(0.0)).collect())
            .collect();
        let k: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
        let two_m = k.iter().sum();
        Dense { w, k, two_m }
    }

    /// Pairwise modularity of labels given in vertex-index order.
    pub fn q(&self, labels: &[u64]) -> f64 {
        let n = self.k.len();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    q += self.w[i][j] - self.k[i] * self.k[j] / self.two_m;
                }
            }
        }
        q / self.two_m
    }

    pub fn labels_of(g: &WeightedGraph, a: &Assignment) -> Vec<u64> {
        g.vertices().iter().map(|&x| a.get(x).unwrap().0).collect()
    }
}

/// `g` with `dw` added to the weight of `(a, b)`.
pub fn bump(g: &WeightedGraph, a: VertexId, b: VertexId, dw: f64) -> WeightedGraph {
    g.apply_delta(&single_change(a, b, dw)).unwrap()
}

pub fn single_change(a: VertexId, b: VertexId, dw: f64) -> dynamo_core::GraphDelta {
    let mut d = dynamo_core::GraphDelta::default();
    d.edge_changes.push(dynamo_core::EdgeChange::new(a, b, dw));
    d
}
