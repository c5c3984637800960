//! Partition similarity scores and the exhaustive modularity oracle.

use std::collections::BTreeMap;

use crate::error::{GraphError, MetricsError};
use crate::graph::WeightedGraph;
use crate::partition::{Assignment, CommunityId, Partition};

pub use crate::partition::modularity;

/// Largest vertex count accepted by [`exhaustive_best_partition`].
pub const EXHAUSTIVE_MAX_VERTICES: usize = 12;

/// Overlap counts between two partitions of the same vertex set.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionTable {
    /// `|c_x ∩ c_y|` for every non-empty cell, keyed by (row, column) index.
    pub cells: BTreeMap<(usize, usize), u64>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub n: u64,
}

impl ConfusionTable {
    pub fn new(rows: &Assignment, cols: &Assignment) -> Result<Self, MetricsError> {
        if rows.len() != cols.len() {
            return Err(MetricsError::VertexSetMismatch);
        }
        let mut row_ix: BTreeMap<CommunityId, usize> = BTreeMap::new();
        let mut col_ix: BTreeMap<CommunityId, usize> = BTreeMap::new();
        let mut cells = BTreeMap::new();
        let mut row_sums = Vec::new();
        let mut col_sums = Vec::new();
        for ((v, a), (u, b)) in rows.iter().zip(cols.iter()) {
            if v != u {
                return Err(MetricsError::VertexSetMismatch);
            }
            let next = row_ix.len();
            let x = *row_ix.entry(a).or_insert(next);
            let next = col_ix.len();
            let y = *col_ix.entry(b).or_insert(next);
            if x == row_sums.len() {
                row_sums.push(0);
            }
            if y == col_sums.len() {
                col_sums.push(0);
            }
            row_sums[x] += 1;
            col_sums[y] += 1;
            *cells.entry((x, y)).or_insert(0) += 1;
        }
        Ok(ConfusionTable {
            cells,
            row_sums,
            col_sums,
            n: rows.len() as u64,
        })
    }

    /// Pair counts `(a, b, c, d)`: together in both, only in rows, only in columns, in neither.
    pub fn pair_counts(&self) -> (f64, f64, f64, f64) {
        let pairs = |k: u64| (k * k.saturating_sub(1) / 2) as f64;
        let a: f64 = self.cells.values().map(|&k| pairs(k)).sum();
        let same_rows: f64 = self.row_sums.iter().map(|&k| pairs(k)).sum();
        let same_cols: f64 = self.col_sums.iter().map(|&k| pairs(k)).sum();
        let b = same_rows - a;
        let c = same_cols - a;
        let d = pairs(self.n) - a - b - c;
        (a, b, c, d)
    }
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .map(|&k| {
            let p = k as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information `2 I / (H_t + H_r)` with natural logarithms.
///
/// Two single-community partitions score 1.
pub fn nmi(c_t: &Assignment, c_r: &Assignment) -> Result<f64, MetricsError> {
    let t = ConfusionTable::new(c_t, c_r)?;
    if t.n == 0 {
        return Err(MetricsError::TooFewVertices(0));
    }
    let n = t.n as f64;
    let h = entropy(&t.row_sums, n) + entropy(&t.col_sums, n);
    if h == 0.0 {
        return Ok(1.0);
    }
    let mut info = 0.0;
    for (&(x, y), &k) in &t.cells {
        let pxy = k as f64 / n;
        let px = t.row_sums[x] as f64 / n;
        let py = t.col_sums[y] as f64 / n;
        info += pxy * (pxy / (px * py)).ln();
    }
    Ok((2.0 * info / h).clamp(0.0, 1.0))
}

/// Pair-counting agreement `2(ad - bc) / (b² + c² + 2ad + (a+d)(b+c))`.
pub fn ari(c_t: &Assignment, c_r: &Assignment) -> Result<f64, MetricsError> {
    let t = ConfusionTable::new(c_t, c_r)?;
    if t.n < 2 {
        return Err(MetricsError::TooFewVertices(t.n as usize));
    }
    let (a, b, c, d) = t.pair_counts();
    let den = b * b + c * c + 2.0 * a * d + (a + d) * (b + c);
    if den == 0.0 {
        return if c_t.same_grouping(c_r) {
            Ok(1.0)
        } else {
            Err(MetricsError::DegenerateDenominator)
        };
    }
    Ok(2.0 * (a * d - b * c) / den)
}

struct Search {
    n: usize,
    adj: Vec<f64>,
    strength: Vec<f64>,
    two_m: f64,
    labels: Vec<usize>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    best: Vec<usize>,
    best_q: f64,
}

impl Search {
    fn visit(&mut self, i: usize, used: usize, score: f64) {
        if i == self.n {
            let q = score / self.two_m;
            if q > self.best_q + 1e-12 {
                self.best_q = q;
                self.best.clone_from(&self.labels);
            }
            return;
        }
        let k = self.strength[i];
        for c in 0..=used.min(self.n - 1) {
            let inner: f64 = (0..i)
                .filter(|&j| self.labels[j] == c)
                .map(|j| self.adj[i * self.n + j])
                .sum();
            let (a0, b0) = (self.alpha[c], self.beta[c]);
            let (a1, b1) = (a0 + 2.0 * inner, b0 + k);
            let next = score - (a0 - b0 * b0 / self.two_m) + (a1 - b1 * b1 / self.two_m);
            self.labels[i] = c;
            self.alpha[c] = a1;
            self.beta[c] = b1;
            self.visit(i + 1, used.max(c + 1), next);
            self.alpha[c] = a0;
            self.beta[c] = b0;
        }
    }
}

/// Modularity-optimal partition by enumerating every set partition.
///
/// Candidates are visited as restricted growth strings in lexicographic order
/// and a later candidate replaces the incumbent only if it is better by more
/// than `1e-12`.
pub fn exhaustive_best_partition(g: &WeightedGraph) -> Result<(Partition, f64), MetricsError> {
    let n = g.vertex_count();
    if n == 0 || g.total_weight() <= 0.0 {
        return Err(GraphError::EmptyGraph.into());
    }
    if n > EXHAUSTIVE_MAX_VERTICES {
        return Err(MetricsError::TooLarge {
            max: EXHAUSTIVE_MAX_VERTICES,
            got: n,
        });
    }
    let mut adj = vec![0.0; n * n];
    for (u, v, w) in g.edges() {
        let (i, j) = (g.index_of(u).unwrap(), g.index_of(v).unwrap());
        adj[i * n + j] = w;
        adj[j * n + i] = w;
    }
    let mut s = Search {
        n,
        adj,
        strength: g
            .vertices()
            .iter()
            .map(|&v| g.strength(v).unwrap())
            .collect(),
        two_m: 2.0 * g.total_weight(),
        labels: vec![0; n],
        alpha: vec![0.0; n],
        beta: vec![0.0; n],
        best: Vec::new(),
        best_q: f64::NEG_INFINITY,
    };
    s.visit(0, 0, 0.0);
    let assignment = g
        .vertices()
        .iter()
        .zip(&s.best)
        .map(|(&v, &c)| (v, CommunityId(c as u64)))
        .collect();
    let p = Partition::rebuild(g, assignment)?;
    Ok((p, s.best_q))
}
