//! Attributed graphs and their normalized adjacency operators.
//!
//! Edges are undirected and carry an integer type. The normalized adjacency
//! of type `i` is `S^(i) = D^{-1/2} A^(i) D^{-1/2}` where `D` is the total
//! degree summed over all types, so `Σ_i S^(i) = S`. Isolated vertices get a
//! zero `D^{-1/2}` entry and therefore zero rows.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::operator::{positions, LinearOperator};
use crate::{Error, Result};

/// Canonical undirected edge, `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub kind: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize, kind: usize) -> Self {
        Self {
            u: a.min(b),
            v: a.max(b),
            kind,
        }
    }
}

/// Immutable undirected graph with per-vertex features and optional labels.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributedGraph {
    n: usize,
    edges: Vec<Edge>,
    edge_type_count: usize,
    feature_dim: usize,
    features: Vec<f64>,
    labels: Vec<Option<f64>>,
    // typed CSR with multiplicity, one entry per incident edge
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    kinds: Vec<usize>,
    // distinct neighbors, used by the graph regressors
    nbr_ptr: Vec<usize>,
    nbrs: Vec<usize>,
}

impl AttributedGraph {
    /// Validates and canonicalizes the edge list.
    ///
    /// `features` is row-major `n × feature_dim`. `labels`, when given, has
    /// length `n`. Self-loops and repeated `(u, v, kind)` triples are
    /// rejected; the same pair may appear once per edge type.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, usize)>,
        edge_type_count: usize,
        feature_dim: usize,
        features: Vec<f64>,
        labels: Option<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if edge_type_count == 0 {
            return Err(Error::InvalidGraph("edge_type_count must be positive".into()));
        }
        if features.len() != n * feature_dim {
            return Err(Error::DimensionMismatch {
                expected: n * feature_dim,
                actual: features.len(),
                context: "feature matrix",
            });
        }
        let labels = labels.unwrap_or_else(|| vec![None; n]);
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: labels.len(),
                context: "label vector",
            });
        }
        let mut canon = Vec::new();
        for (a, b, kind) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            if kind >= edge_type_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has type {kind} but only {edge_type_count} types exist"
                )));
            }
            canon.push(Edge::new(a, b, kind));
        }
        canon.sort_unstable_by_key(|e| (e.u, e.v, e.kind));
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {}) of type {}",
                w[0].u, w[0].v, w[0].kind
            )));
        }

        let mut degree = vec![0usize; n];
        for e in &canon {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + degree[i];
        }
        let mut fill = row_ptr.clone();
        let mut cols = vec![0usize; 2 * canon.len()];
        let mut kinds = vec![0usize; 2 * canon.len()];
        for e in &canon {
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                cols[fill[a]] = b;
                kinds[fill[a]] = e.kind;
                fill[a] += 1;
            }
        }
        // canonical order within rows makes every sum deterministic
        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            let mut row: Vec<(usize, usize)> =
                cols[lo..hi].iter().copied().zip(kinds[lo..hi].iter().copied()).collect();
            row.sort_unstable();
            for (k, (c, t)) in row.into_iter().enumerate() {
                cols[lo + k] = c;
                kinds[lo + k] = t;
            }
        }
        let mut nbr_ptr = vec![0usize; n + 1];
        let mut nbrs = Vec::with_capacity(cols.len());
        for i in 0..n {
            let mut last = usize::MAX;
            for &c in &cols[row_ptr[i]..row_ptr[i + 1]] {
                if c != last {
                    nbrs.push(c);
                    last = c;
                }
            }
            nbr_ptr[i + 1] = nbrs.len();
        }

        Ok(Self {
            n,
            edges: canon,
            edge_type_count,
            feature_dim,
            features,
            labels,
            row_ptr,
            cols,
            kinds,
            nbr_ptr,
            nbrs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_type_count(&self) -> usize {
        self.edge_type_count
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    pub fn labels(&self) -> &[Option<f64>] {
        &self.labels
    }

    /// Total degree across all edge types (row sum of `A`).
    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Distinct neighbors of `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.nbrs[self.nbr_ptr[i]..self.nbr_ptr[i + 1]]
    }

    /// Labels restricted to `set`, failing on any missing label.
    pub fn labels_on(&self, set: &[usize]) -> Result<Vec<f64>> {
        set.iter()
            .map(|&i| {
                self.labels[i].ok_or_else(|| {
                    Error::InvalidArgument(format!("vertex {i} has no label"))
                })
            })
            .collect()
    }

    /// Replaces the feature matrix, keeping topology and labels.
    pub fn with_features(&self, feature_dim: usize, features: Vec<f64>) -> Result<Self> {
        if features.len() != self.n * feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.n * feature_dim,
                actual: features.len(),
                context: "feature matrix",
            });
        }
        let mut g = self.clone();
        g.feature_dim = feature_dim;
        g.features = features;
        Ok(g)
    }

    pub fn with_labels(&self, labels: Vec<Option<f64>>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: labels.len(),
                context: "label vector",
            });
        }
        let mut g = self.clone();
        g.labels = labels;
        Ok(g)
    }

    fn inv_sqrt_degrees(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| match self.degree(i) {
                0 => 0.0,
                d => 1.0 / (d as f64).sqrt(),
            })
            .collect()
    }
}

/// Labeled / unlabeled split of the vertex set, both sides sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexPartition {
    n: usize,
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
}

impl VertexPartition {
    pub fn from_labeled(n: usize, labeled: &[usize]) -> Result<Self> {
        let mut mask = vec![false; n];
        for &i in labeled {
            if i >= n {
                return Err(Error::InvalidArgument(format!("vertex {i} out of range 0..{n}")));
            }
            if mask[i] {
                return Err(Error::InvalidArgument(format!("vertex {i} listed twice")));
            }
            mask[i] = true;
        }
        let labeled = (0..n).filter(|&i| mask[i]).collect();
        let unlabeled = (0..n).filter(|&i| !mask[i]).collect();
        Ok(Self {
            n,
            labeled,
            unlabeled,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }
}

/// Symmetric sparse matrix in CSR form; the realized normalized adjacency.
#[derive(Clone, Debug)]
pub struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entry `(i, j)`, summing duplicates.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        (self.row_ptr[i]..self.row_ptr[i + 1])
            .filter(|&k| self.cols[k] == j)
            .map(|k| self.values[k])
            .sum()
    }

    /// `M_PQ v`: rows restricted to `rows`, `v` indexed by `cols`.
    pub fn block_apply(&self, rows: &[usize], cols: &[usize], v: &[f64]) -> Vec<f64> {
        let pos = positions(self.n, cols);
        rows.iter()
            .map(|&i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .filter_map(|k| match pos[self.cols[k]] {
                        usize::MAX => None,
                        p => Some(self.values[k] * v[p]),
                    })
                    .sum()
            })
            .collect()
    }

    /// Row-wise iteration over `(col, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.values[k]))
    }
}

impl LinearOperator for SparseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }
}

/// All typed normalized adjacencies fused into one CSR, so `Σ_i w_i S^(i) x`
/// costs a single pass over the edges. Entries are `d_i^{-1/2} d_j^{-1/2}`,
/// rebuilt from per-vertex factors so each stored edge takes six bytes.
#[derive(Clone, Debug)]
pub struct TypedAdjacency {
    n: usize,
    type_count: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    kinds: Vec<u16>,
    inv_sqrt_degree: Vec<f64>,
}

impl TypedAdjacency {
    /// Panics beyond `u32::MAX` vertices or `u16::MAX` edge types.
    pub fn new(graph: &AttributedGraph) -> Self {
        let narrow = |v: usize| u32::try_from(v).expect("vertex index exceeds u32");
        Self {
            n: graph.n,
            type_count: graph.edge_type_count,
            row_ptr: graph.row_ptr.clone(),
            cols: graph.cols.iter().map(|&c| narrow(c)).collect(),
            kinds: graph
                .kinds
                .iter()
                .map(|&k| u16::try_from(k).expect("edge type exceeds u16"))
                .collect(),
            inv_sqrt_degree: graph.inv_sqrt_degrees(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn type_count(&self) -> usize {
        self.type_count
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `out = Σ_i weights[i] S^(i) x`.
    pub fn apply_weighted_into(&self, weights: &[f64], x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(weights.len(), self.type_count);
        let inv = &self.inv_sqrt_degree;
        // one random access per edge: scale by d_j^{-1/2} up front
        let y: Vec<f64> = x.iter().zip(inv).map(|(a, b)| a * b).collect();
        self.sum_rows(weights, (0..self.n).zip(out.iter_mut()), &y);
    }

    /// Block form of [`apply_weighted_into`](Self::apply_weighted_into):
    /// rows in `rows`, input indexed by the set whose positions are `col_pos`.
    pub(crate) fn apply_weighted_block(
        &self,
        weights: &[f64],
        rows: &[usize],
        col_pos: &[usize],
        x: &[f64],
        out: &mut [f64],
    ) {
        let y: Vec<f64> = col_pos
            .iter()
            .zip(&self.inv_sqrt_degree)
            .map(|(&p, d)| if p == usize::MAX { 0.0 } else { d * x[p] })
            .collect();
        self.sum_rows(weights, rows.iter().copied().zip(out.iter_mut()), &y);
    }

    fn sum_rows<'o>(&self, weights: &[f64], rows: impl Iterator<Item = (usize, &'o mut f64)>, y: &[f64]) {
        let inv = &self.inv_sqrt_degree;
        if self.type_count == 1 {
            let w = weights[0];
            for (i, o) in rows {
                let acc: f64 = self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|&j| y[j as usize])
                    .sum();
                *o = w * inv[i] * acc;
            }
            return;
        }
        for (i, o) in rows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += weights[self.kinds[k] as usize] * y[self.cols[k] as usize];
            }
            *o = inv[i] * acc;
        }
    }

    /// Realizes `S^(kind)`, or the total `S` when `kind` is `None`.
    pub fn realize(&self, kind: Option<usize>) -> SparseSymmetric {
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if kind.is_none_or(|t| t == self.kinds[k] as usize) {
                    let j = self.cols[k] as usize;
                    cols.push(j);
                    values.push(self.inv_sqrt_degree[i] * self.inv_sqrt_degree[j]);
                }
            }
            row_ptr[i + 1] = cols.len();
        }
        SparseSymmetric {
            n: self.n,
            row_ptr,
            cols,
            values,
        }
    }
}

/// `S = D^{-1/2} A D^{-1/2}` summed over all edge types.
pub fn normalized_adjacency(graph: &AttributedGraph) -> SparseSymmetric {
    TypedAdjacency::new(graph).realize(None)
}

/// One `S^(i)` per edge type, normalized by the total degree.
pub fn typed_normalized_adjacency(graph: &AttributedGraph) -> Vec<SparseSymmetric> {
    let typed = TypedAdjacency::new(graph);
    (0..typed.type_count).map(|t| typed.realize(Some(t))).collect()
}

/// Small-world graph: ring lattice with each clockwise edge rewired at one
/// endpoint with probability `rewire_prob`. Produces `n · mean_degree / 2`
/// edges, no features and no labels.
pub fn watts_strogatz(
    n: usize,
    mean_degree: usize,
    rewire_prob: f64,
    seed: u64,
) -> Result<AttributedGraph> {
    if mean_degree % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "mean degree must be even, got {mean_degree}"
        )));
    }
    if mean_degree >= n {
        return Err(Error::InvalidArgument(format!(
            "mean degree {mean_degree} must be smaller than n = {n}"
        )));
    }
    if !(0.0..=1.0).contains(&rewire_prob) {
        return Err(Error::InvalidArgument(format!(
            "rewire probability {rewire_prob} outside [0, 1]"
        )));
    }
    let half = mean_degree / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * half);
    let mut present: HashSet<(usize, usize)> = HashSet::with_capacity(n * half);
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    for j in 1..=half {
        for u in 0..n {
            let v = (u + j) % n;
            edges.push((u, v));
            present.insert(key(u, v));
        }
    }
    let mut degree = vec![mean_degree; n];
    for slot in 0..edges.len() {
        if rng.random::<f64>() >= rewire_prob {
            continue;
        }
        let (u, v) = edges[slot];
        if degree[u] >= n - 1 {
            continue;
        }
        let w = loop {
            let w = rng.random_range(0..n);
            if w != u && !present.contains(&key(u, w)) {
                break w;
            }
        };
        present.remove(&key(u, v));
        present.insert(key(u, w));
        degree[v] -= 1;
        degree[w] += 1;
        edges[slot] = (u, w);
    }
    AttributedGraph::new(
        n,
        edges.into_iter().map(|(a, b)| (a, b, 0)),
        1,
        0,
        Vec::new(),
        None,
    )
}

/// Coordinate along an axis of `len` points, mapped onto `[-1, 1]`.
/// A single-point axis maps to -1.
pub fn grid_coordinate(index: usize, len: usize) -> f64 {
    if len <= 1 {
        -1.0
    } else {
        -1.0 + 2.0 * index as f64 / (len - 1) as f64
    }
}

/// 4-neighbor lattice. Vertex `r * cols + c` has features
/// `(row coordinate, column coordinate)` rescaled to `[-1, 1]`.
pub fn grid_graph(rows: usize, cols: usize) -> Result<AttributedGraph> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("grid dimensions must be positive".into()));
    }
    let idx = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((idx(r, c), idx(r, c + 1), 0));
            }
            if r + 1 < rows {
                edges.push((idx(r, c), idx(r + 1, c), 0));
            }
        }
    }
    let mut features = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            features.push(grid_coordinate(r, rows));
            features.push(grid_coordinate(c, cols));
        }
    }
    AttributedGraph::new(rows * cols, edges, 1, 2, features, None)
}
