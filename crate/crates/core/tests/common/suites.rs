//! Randomized brute-force suites shared by the proposition tests and the
//! acceptance run. Each returns its instance count and the indices of the
//! instances that broke the statement under test.

use std::collections::{BTreeMap, BTreeSet};

use dynamo_core::dynamo::intermediate_assignment;
use dynamo_core::{
    bisplit_threshold, ccea_merge_threshold, dynamo_update, exhaustive_best_partition, init,
    Assignment, CommunityId, DynamoError, GraphBuilder, LouvainConfig, Partition, VertexId,
    WeightedGraph,
};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::*;

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub instances: usize,
    pub violations: Vec<usize>,
}

impl Outcome {
    fn record(&mut self, ok: bool) {
        if !ok {
            self.violations.push(self.instances);
        }
    }
}

/// Intra-community increase on a pair of the exhaustive optimum.
#[derive(Clone, Debug, Default)]
pub struct IntraIncrease {
    /// The best partition keeping the endpoints together beats every split.
    pub optimum: Outcome,
    /// The intermediate partition seeds the endpoints together.
    pub seeded: Outcome,
    /// The updated partition keeps the endpoints together.
    pub updated: Outcome,
}

/// Leaf-edge decrease inside a community of the exhaustive optimum.
#[derive(Clone, Debug, Default)]
pub struct LeafDecrease {
    /// The unchanged structure beats every bi-split separating the endpoints.
    pub bisplits: Outcome,
    pub updated: Outcome,
}

/// Cross-community decrease. Instances whose two communities have no
/// internal edges and share every edge between them are listed separately:
/// their contribution stays exactly `-1/2`.
#[derive(Clone, Debug, Default)]
pub struct CrossDecrease {
    pub outcome: Outcome,
    pub flat: Vec<usize>,
}

/// New vertex linked to several communities. `outcome` covers every
/// candidate pair; `light` covers pairs where the heaviest-link community has
/// no more strength than the candidate it is compared with.
#[derive(Clone, Debug, Default)]
pub struct HeaviestLink {
    pub outcome: Outcome,
    pub light: Outcome,
}

fn ids(g: &WeightedGraph) -> Vec<VertexId> {
    g.vertices().to_vec()
}

/// Maximum modularity over partitions of `d`'s vertices, split by whether
/// vertices `i` and `j` share a community.
fn best_apart_and_together(d: &Dense, i: usize, j: usize) -> (f64, f64) {
    let (mut apart, mut together) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for ls in all_partitions(d.k.len()) {
        let q = d.q(&ls);
        if ls[i] == ls[j] {
            together = together.max(q);
        } else {
            apart = apart.max(q);
        }
    }
    (apart, together)
}

pub fn intra_increase(seed: u64, count: usize) -> IntraIncrease {
    let mut r = rng(seed);
    let cfg = LouvainConfig::default();
    let mut out = IntraIncrease::default();
    while out.optimum.instances < count {
        let n = r.random_range(4..=8u64);
        let g = random_connected(&mut r, n, 0.4, 2.5);
        let (p, _) = exhaustive_best_partition(&g).unwrap();
        let vs = ids(&g);
        let pairs: Vec<(usize, usize)> = (0..vs.len())
            .flat_map(|a| (a + 1..vs.len()).map(move |b| (a, b)))
            .filter(|&(a, b)| p.assignment().together(vs[a], vs[b]))
            .collect();
        let Some(&(i, j)) = pairs.choose(&mut r) else {
            continue;
        };
        let dw = r.random_range(0.1..5.0);
        let g1 = bump(&g, vs[i], vs[j], dw);
        let (apart, together) = best_apart_and_together(&Dense::new(&g1), i, j);
        let d = single_change(vs[i], vs[j], dw);
        let plan = init(&g1, &g, &p, &d).unwrap();
        let start = intermediate_assignment(&g1, &p, &plan);
        let updated = dynamo_update(&g1, &g, &p, &d, &cfg).unwrap();
        out.optimum.record(together > apart + 1e-12);
        out.seeded.record(start.together(vs[i], vs[j]));
        out.updated
            .record(updated.assignment().together(vs[i], vs[j]));
        for o in [&mut out.optimum, &mut out.seeded, &mut out.updated] {
            o.instances += 1;
        }
    }
    out
}

pub fn leaf_decrease(seed: u64, count: usize) -> LeafDecrease {
    let mut r = rng(seed);
    let cfg = LouvainConfig::default();
    let mut out = LeafDecrease::default();
    while out.bisplits.instances < count {
        let n = r.random_range(4..=8u64);
        let g = random_connected(&mut r, n, 0.3, 2.5);
        let (p, _) = exhaustive_best_partition(&g).unwrap();
        let vs = ids(&g);
        let leaves: Vec<(usize, VertexId)> = vs
            .iter()
            .enumerate()
            .filter(|&(_, &x)| g.degree(x) == Some(1))
            .map(|(a, &x)| (a, g.neighbors(x).next().unwrap().0))
            .filter(|&(a, y)| p.assignment().together(vs[a], y))
            .collect();
        let Some(&(i, y)) = leaves.choose(&mut r) else {
            continue;
        };
        let j = g.index_of(y).unwrap();
        let w = g.weight(vs[i], y).unwrap();
        let dw = -w * r.random_range(0.05..0.95);
        let g1 = bump(&g, vs[i], y, dw);
        let dense = Dense::new(&g1);
        let labels = Dense::labels_of(&g1, p.assignment());
        let unchanged = dense.q(&labels);
        let c = labels[i];
        let others: Vec<usize> = (0..vs.len())
            .filter(|&x| labels[x] == c && x != i && x != j)
            .collect();
        let kept = (0u32..1 << others.len()).all(|mask| {
            let mut split = labels.clone();
            split[i] = u64::MAX;
            for (b, &x) in others.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    split[x] = u64::MAX;
                }
            }
            dense.q(&split) <= unchanged + 1e-12
        });
        let updated = dynamo_update(&g1, &g, &p, &single_change(vs[i], y, dw), &cfg).unwrap();
        out.bisplits.record(kept);
        out.updated.record(updated.assignment().together(vs[i], y));
        out.bisplits.instances += 1;
        out.updated.instances += 1;
    }
    out
}

/// Crossover of the merge threshold on random partitions of at most
/// `max_k` labels. Every instance probes offsets around the threshold plus
/// one random increase, skipping increases within 1e-6 of it.
pub fn merge_crossover(seed: u64, count: usize, max_k: u64) -> Outcome {
    let mut r = rng(seed);
    let mut out = Outcome::default();
    while out.instances < count {
        let n = r.random_range(3..=10u64);
        let g = WeightedGraph::from_edges(random_edges(&mut r, n, 0.4, 3.0)).unwrap();
        if g.total_weight() <= 0.0 || g.vertex_count() < 3 {
            continue;
        }
        let k = r.random_range(2..=max_k);
        let a = random_assignment(&mut r, &g, k);
        let vs = ids(&g);
        let (i, j) = (*vs.choose(&mut r).unwrap(), *vs.choose(&mut r).unwrap());
        let (ci, cj) = (a.get(i).unwrap(), a.get(j).unwrap());
        if ci == cj {
            continue;
        }
        let p = Partition::rebuild(&g, a.clone()).unwrap();
        let thr = ccea_merge_threshold(&g, &p, i, j).unwrap();
        let merged: Assignment = a
            .iter()
            .map(|(x, c)| (x, if c == cj { ci } else { c }))
            .collect();
        let mut dws: Vec<f64> = [-1e-3, -1e-6, 1e-6, 1e-3, 0.5, 2.0]
            .iter()
            .map(|o| thr + o)
            .collect();
        dws.push(r.random_range(0.01..8.0));
        let agrees = dws
            .into_iter()
            .filter(|&dw| dw > 0.0 && (dw - thr).abs() >= 1e-6 - 1e-12)
            .all(|dw| {
                let g1 = bump(&g, i, j, dw);
                let d = Dense::new(&g1);
                let gain = d.q(&Dense::labels_of(&g1, &merged)) - d.q(&Dense::labels_of(&g1, &a));
                (gain > 0.0) == (dw > thr)
            });
        out.record(agrees);
        out.instances += 1;
    }
    out
}

/// Direction of the bi-split threshold on a single community of six
/// vertices, split into a random part holding the increased pair and the rest.
pub fn bisplit_direction(seed: u64, count: usize) -> Outcome {
    let mut r = rng(seed);
    let mut out = Outcome::default();
    while out.instances < count {
        let g = random_connected(&mut r, 6, 0.5, 2.5);
        let vs = ids(&g);
        let one: Assignment = vs.iter().map(|&x| (x, CommunityId(0))).collect();
        let p = Partition::rebuild(&g, one.clone()).unwrap();
        let size = r.random_range(2..=4);
        let c_p: BTreeSet<VertexId> = vs.choose_multiple(&mut r, size).copied().collect();
        let inside: Vec<VertexId> = c_p.iter().copied().collect();
        let thr = match bisplit_threshold(&g, &p, CommunityId(0), &c_p) {
            Ok(t) => t,
            Err(DynamoError::DegenerateDenominator) => continue,
            Err(e) => panic!("{e}"),
        };
        let beta_q: f64 = vs
            .iter()
            .filter(|x| !c_p.contains(x))
            .map(|&x| g.strength(x).unwrap())
            .sum();
        let cross: f64 = c_p
            .iter()
            .flat_map(|&x| g.neighbors(x))
            .filter(|(y, _)| !c_p.contains(y))
            .map(|(_, w)| w)
            .sum();
        let positive = beta_q - cross > 0.0;
        let split: Assignment = vs
            .iter()
            .map(|&x| (x, CommunityId(c_p.contains(&x) as u64)))
            .collect();
        let dw = r.random_range(0.05..6.0);
        if (dw - thr).abs() < 1e-6 {
            continue;
        }
        let g1 = bump(&g, inside[0], inside[1], dw);
        let d = Dense::new(&g1);
        let gain = d.q(&Dense::labels_of(&g1, &split)) - d.q(&Dense::labels_of(&g1, &one));
        out.record((gain > 0.0) == ((dw > thr) == positive));
        out.instances += 1;
    }
    out
}

/// Contribution `(alpha_c - beta_c^2 / 2m) / 2m` summed over `cs`.
pub fn contribution(g: &WeightedGraph, a: &Assignment, cs: &[CommunityId]) -> f64 {
    let d = Dense::new(g);
    let ls = Dense::labels_of(g, a);
    cs.iter()
        .map(|&c| {
            let members: Vec<usize> = (0..ls.len()).filter(|&x| ls[x] == c.0).collect();
            let beta: f64 = members.iter().map(|&x| d.k[x]).sum();
            let alpha: f64 = members
                .iter()
                .flat_map(|&x| members.iter().map(move |&y| (x, y)))
                .map(|(x, y)| d.w[x][y])
                .sum();
            (alpha - beta * beta / d.two_m) / d.two_m
        })
        .sum()
}

pub fn cross_decrease(seed: u64, count: usize) -> CrossDecrease {
    let mut r = rng(seed);
    let mut out = CrossDecrease::default();
    while out.outcome.instances < count {
        let n = r.random_range(4..=8u64);
        let g = WeightedGraph::from_edges(random_edges(&mut r, n, 0.5, 3.0)).unwrap();
        if g.vertex_count() < 3 {
            continue;
        }
        let a = random_assignment(&mut r, &g, 4);
        let cross: Vec<_> = g
            .edges()
            .filter(|&(x, y, _)| a.get(x) != a.get(y))
            .collect();
        let Some(&(x, y, w)) = cross.choose(&mut r) else {
            continue;
        };
        let dw = -w * [0.3, 0.5, 1.0].choose(&mut r).unwrap();
        let g1 = bump(&g, x, y, dw);
        if g1.total_weight() <= 0.0 {
            continue;
        }
        let cs = [a.get(x).unwrap(), a.get(y).unwrap()];
        let before = contribution(&g, &a, &cs);
        let after = contribution(&g1, &a, &cs);
        let p = Partition::rebuild(&g, a.clone()).unwrap();
        let m = g.total_weight();
        let flat = cs.iter().all(|&c| {
            let agg = p.community(c).unwrap();
            agg.alpha == 0.0 && (agg.beta - m).abs() < 1e-9
        });
        if flat {
            out.flat.push(out.outcome.instances);
        }
        out.outcome.record(after > before);
        out.outcome.instances += 1;
    }
    out
}

/// `g` plus vertex `new` joined to `targets`.
pub fn with_new_vertex(
    g: &WeightedGraph,
    new: VertexId,
    targets: &[(VertexId, f64)],
) -> WeightedGraph {
    let mut b = GraphBuilder::new();
    for &x in g.vertices() {
        b.add_vertex(x);
    }
    for (x, y, w) in g.edges() {
        b.add_edge(x, y, w).unwrap();
    }
    for &(t, w) in targets {
        b.add_edge(new, t, w).unwrap();
    }
    b.build()
}

pub fn with_label(a: &Assignment, x: VertexId, c: CommunityId) -> Assignment {
    let mut out = a.clone();
    out.insert(x, c);
    out
}

pub fn single_community_join(seed: u64, count: usize) -> Outcome {
    let mut r = rng(seed);
    let mut out = Outcome::default();
    while out.instances < count {
        let n = r.random_range(3..=8u64);
        let g = WeightedGraph::from_edges(random_edges(&mut r, n, 0.4, 3.0)).unwrap();
        if g.vertex_count() < 2 {
            continue;
        }
        let a = random_assignment(&mut r, &g, 3);
        let target = a.get(*ids(&g).choose(&mut r).unwrap()).unwrap();
        let members: Vec<VertexId> = a
            .iter()
            .filter(|&(_, c)| c == target)
            .map(|(x, _)| x)
            .collect();
        let size = r.random_range(1..=members.len());
        let edges: Vec<(VertexId, f64)> = members
            .choose_multiple(&mut r, size)
            .map(|&x| (x, r.random_range(0.2..3.0)))
            .collect();
        let new = VertexId(n + 10);
        let g1 = with_new_vertex(&g, new, &edges);
        let d = Dense::new(&g1);
        let joined = d.q(&Dense::labels_of(&g1, &with_label(&a, new, target)));
        let alone = d.q(&Dense::labels_of(
            &g1,
            &with_label(&a, new, CommunityId(99)),
        ));
        out.record(joined > alone);
        out.instances += 1;
    }
    out
}

pub fn heaviest_link(seed: u64, count: usize) -> HeaviestLink {
    let mut r: ChaCha8Rng = rng(seed);
    let mut out = HeaviestLink::default();
    while out.outcome.instances < count {
        let n = r.random_range(4..=8u64);
        let g = WeightedGraph::from_edges(random_edges(&mut r, n, 0.5, 3.0)).unwrap();
        if g.vertex_count() < 3 {
            continue;
        }
        let a = random_assignment(&mut r, &g, 3);
        let vs = ids(&g);
        let size = r.random_range(2..=vs.len());
        let edges: Vec<(VertexId, f64)> = vs
            .choose_multiple(&mut r, size)
            .map(|&x| (x, *[0.5, 1.0, 2.0, 3.0].choose(&mut r).unwrap()))
            .collect();
        let mut link: BTreeMap<CommunityId, f64> = BTreeMap::new();
        for &(x, w) in &edges {
            *link.entry(a.get(x).unwrap()).or_default() += w;
        }
        if link.len() < 2 {
            continue;
        }
        let mut ranked: Vec<(CommunityId, f64)> = link.into_iter().collect();
        ranked.sort_by(|x, y| y.1.total_cmp(&x.1));
        if ranked[0].1 == ranked[1].1 {
            continue;
        }
        let p = Partition::rebuild(&g, a.clone()).unwrap();
        let beta = |c: CommunityId| p.community(c).unwrap().beta;
        let new = VertexId(n + 10);
        let g1 = with_new_vertex(&g, new, &edges);
        let d = Dense::new(&g1);
        let q_of = |c: CommunityId| d.q(&Dense::labels_of(&g1, &with_label(&a, new, c)));
        let best = ranked[0].0;
        for &(c, _) in &ranked[1..] {
            let ok = q_of(best) >= q_of(c) - 1e-12;
            out.outcome.record(ok);
            out.outcome.instances += 1;
            if beta(best) <= beta(c) {
                out.light.record(ok);
                out.light.instances += 1;
            }
        }
    }
    out
}

/// Six vertices whose optimum {0, 4}, {1, 2, 3, 5} stops being optimal once
/// the intra-community edge (2, 3) is added (`extra`).
pub fn remark_graph(extra: bool) -> WeightedGraph {
    let mut edges = vec![
        (0, 1, 1.0),
        (0, 4, 1.0),
        (1, 3, 1.0),
        (1, 5, 1.0),
        (2, 5, 1.0),
        (3, 5, 1.0),
    ];
    if extra {
        edges.push((2, 3, 1.0));
    }
    WeightedGraph::from_edges(edges).unwrap()
}
