//! Signed bipartite graph model: construction, agreement accounting and
//! synthetic instance generation.
//!
//! A graph over left vertices `U` (|U| = m) and right vertices `V` (|V| = n)
//! is stored as a dense m×n bi-adjacency matrix with entries in {-1, 0, +1}.
//! A `0` entry marks an unlabeled pair (incomplete instance) and never
//! contributes to the agreement count.

pub mod io;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("record {record}: vertex index ({u}, {v}) out of range for {m}x{n} graph")]
    IndexOutOfRange {
        record: usize,
        u: usize,
        v: usize,
        m: usize,
        n: usize,
    },
    #[error("record {record}: duplicate pair ({u}, {v})")]
    DuplicatePair { record: usize, u: usize, v: usize },
    #[error("record {record}: sign {sign} not in {{-1, +1}}")]
    InvalidSign { record: usize, sign: i32 },
    #[error("graph must have at least one vertex on each side (got {m}x{n})")]
    EmptySide { m: usize, n: usize },
    #[error("flip probability {p} outside [0, 1]")]
    BadFlipProbability { p: f64 },
    #[error("planted cluster count must be at least 1")]
    ZeroClusters,
    #[error("ratings stream is empty")]
    EmptyRatings,
    #[error("clustering is {cm}x{cn} labels but graph is {m}x{n}")]
    DimensionMismatch {
        cm: usize,
        cn: usize,
        m: usize,
        n: usize,
    },
    #[error("label {label} at {side} vertex {index} exceeds cluster bound {k}")]
    LabelOutOfRange {
        side: &'static str,
        index: usize,
        label: usize,
        k: usize,
    },
}

/// Immutable signed bipartite graph with dense {-1, 0, +1} weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedBipartiteGraph {
    m: usize,
    n: usize,
    /// Row-major m×n sign matrix.
    weights: Vec<i8>,
    neg_count: usize,
    pos_count: usize,
}

impl SignedBipartiteGraph {
    /// Builds a graph from an explicit dense weight matrix (row-major).
    /// Entries must be -1, 0 or +1.
    pub fn from_dense(m: usize, n: usize, weights: Vec<i8>) -> Result<Self, GraphError> {
        if m == 0 || n == 0 {
            return Err(GraphError::EmptySide { m, n });
        }
        assert_eq!(weights.len(), m * n, "weight matrix shape mismatch");
        for (i, &w) in weights.iter().enumerate() {
            if !(-1..=1).contains(&w) {
                return Err(GraphError::InvalidSign {
                    record: i,
                    sign: w as i32,
                });
            }
        }
        let neg_count = weights.iter().filter(|&&w| w == -1).count();
        let pos_count = weights.iter().filter(|&&w| w == 1).count();
        Ok(Self {
            m,
            n,
            weights,
            neg_count,
            pos_count,
        })
    }

    /// Builds a graph from a list of `(u, v, sign)` records; unlisted pairs
    /// stay unlabeled (0). Rejects out-of-range indices, duplicate pairs and
    /// signs outside {-1, +1}, reporting the offending record position.
    pub fn from_edge_list(
        m: usize,
        n: usize,
        edges: &[(usize, usize, i32)],
    ) -> Result<Self, GraphError> {
        if m == 0 || n == 0 {
            return Err(GraphError::EmptySide { m, n });
        }
        let mut weights = vec![0i8; m * n];
        for (record, &(u, v, sign)) in edges.iter().enumerate() {
            if u >= m || v >= n {
                return Err(GraphError::IndexOutOfRange { record, u, v, m, n });
            }
            if sign != -1 && sign != 1 {
                return Err(GraphError::InvalidSign { record, sign });
            }
            let slot = &mut weights[u * n + v];
            if *slot != 0 {
                return Err(GraphError::DuplicatePair { record, u, v });
            }
            *slot = sign as i8;
        }
        Self::from_dense(m, n, weights)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> i8 {
        self.weights[u * self.n + v]
    }

    /// Row `u` of the bi-adjacency matrix.
    #[inline]
    pub fn row(&self, u: usize) -> &[i8] {
        &self.weights[u * self.n..(u + 1) * self.n]
    }

    /// Number of `-1` entries.
    pub fn neg_count(&self) -> usize {
        self.neg_count
    }

    /// Number of `+1` entries.
    pub fn pos_count(&self) -> usize {
        self.pos_count
    }

    /// Number of labeled pairs.
    pub fn nonzero_count(&self) -> usize {
        self.pos_count + self.neg_count
    }

    /// True when every pair is labeled.
    pub fn is_complete(&self) -> bool {
        self.nonzero_count() == self.m * self.n
    }
}

/// Assignment of every vertex of `U ∪ V` to one of at most `k` clusters.
/// Empty clusters are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    pub labels_u: Vec<usize>,
    pub labels_v: Vec<usize>,
}

impl Clustering {
    pub fn new(k: usize, labels_u: Vec<usize>, labels_v: Vec<usize>) -> Result<Self, GraphError> {
        let c = Self {
            k,
            labels_u,
            labels_v,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        for (index, &label) in self.labels_u.iter().enumerate() {
            if label >= self.k {
                return Err(GraphError::LabelOutOfRange {
                    side: "U",
                    index,
                    label,
                    k: self.k,
                });
            }
        }
        for (index, &label) in self.labels_v.iter().enumerate() {
            if label >= self.k {
                return Err(GraphError::LabelOutOfRange {
                    side: "V",
                    index,
                    label,
                    k: self.k,
                });
            }
        }
        Ok(())
    }

    /// Number of nonempty clusters.
    pub fn nonempty_clusters(&self) -> usize {
        let mut used = vec![false; self.k];
        for &l in self.labels_u.iter().chain(self.labels_v.iter()) {
            used[l] = true;
        }
        used.iter().filter(|&&b| b).count()
    }

    /// Number of clusters containing exactly one vertex.
    pub fn singleton_clusters(&self) -> usize {
        let mut sizes = vec![0usize; self.k];
        for &l in self.labels_u.iter().chain(self.labels_v.iter()) {
            sizes[l] += 1;
        }
        sizes.iter().filter(|&&s| s == 1).count()
    }
}

/// Generates a complete planted instance: every vertex gets a uniform cluster
/// id in `[0, k_true)`, an edge is `+1` iff its endpoints share a cluster,
/// and each sign is then flipped independently with probability `p`.
///
/// Identical `(m, n, k_true, p, seed)` reproduce the instance bit for bit.
/// Draw order: U labels, V labels, then flips in row-major edge order.
pub fn generate_planted(
    m: usize,
    n: usize,
    k_true: usize,
    p: f64,
    seed: u64,
) -> Result<(SignedBipartiteGraph, Clustering), GraphError> {
    if m == 0 || n == 0 {
        return Err(GraphError::EmptySide { m, n });
    }
    if k_true == 0 {
        return Err(GraphError::ZeroClusters);
    }
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(GraphError::BadFlipProbability { p });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels_u: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k_true)).collect();
    let labels_v: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k_true)).collect();
    let mut weights = vec![0i8; m * n];
    for u in 0..m {
        for v in 0..n {
            let mut sign: i8 = if labels_u[u] == labels_v[v] { 1 } else { -1 };
            if rng.gen::<f64>() < p {
                sign = -sign;
            }
            weights[u * n + v] = sign;
        }
    }
    let graph = SignedBipartiteGraph::from_dense(m, n, weights)?;
    let planted = Clustering::new(k_true, labels_u, labels_v)?;
    Ok((graph, planted))
}

/// Threshold rule for turning numeric ratings into edge signs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Mean of all ratings in the stream.
    GlobalMean,
    Fixed(f64),
}

/// Index maps produced by [`from_ratings`]: external ids in first-seen order.
#[derive(Debug, Clone)]
pub struct IdMaps {
    pub users: Vec<String>,
    pub items: Vec<String>,
}

/// Builds an incomplete instance from `(user, item, rating)` records.
/// Ids are mapped to dense indices in first-seen order. A rated pair gets
/// `+1` when its rating is strictly greater than the threshold and `-1`
/// otherwise; unrated pairs stay `0`.
pub fn from_ratings(
    records: &[(String, String, f64)],
    threshold: Threshold,
) -> Result<(SignedBipartiteGraph, IdMaps), GraphError> {
    if records.is_empty() {
        return Err(GraphError::EmptyRatings);
    }
    let cut = match threshold {
        Threshold::Fixed(t) => t,
        Threshold::GlobalMean => {
            records.iter().map(|r| r.2).sum::<f64>() / records.len() as f64
        }
    };
    let mut users: Vec<String> = Vec::new();
    let mut items: Vec<String> = Vec::new();
    let mut user_index: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let mut item_index: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let mut edges: Vec<(usize, usize, i32)> = Vec::with_capacity(records.len());
    for (user, item, rating) in records {
        let u = *user_index.entry(user.as_str()).or_insert_with(|| {
            users.push(user.clone());
            users.len() - 1
        });
        let v = *item_index.entry(item.as_str()).or_insert_with(|| {
            items.push(item.clone());
            items.len() - 1
        });
        let sign = if *rating > cut { 1 } else { -1 };
        edges.push((u, v, sign));
    }
    let graph = SignedBipartiteGraph::from_edge_list(users.len(), items.len(), &edges)?;
    Ok((graph, IdMaps { users, items }))
}

/// Counts agreements by direct edge scan: a `+1` edge agrees when its
/// endpoints share a cluster, a `-1` edge agrees when they do not.
/// Unlabeled pairs never contribute. Integer-exact.
pub fn count_agreements(
    g: &SignedBipartiteGraph,
    c: &Clustering,
) -> Result<u64, GraphError> {
    if c.labels_u.len() != g.m || c.labels_v.len() != g.n {
        return Err(GraphError::DimensionMismatch {
            cm: c.labels_u.len(),
            cn: c.labels_v.len(),
            m: g.m,
            n: g.n,
        });
    }
    c.validate()?;
    let mut agreements = 0u64;
    for u in 0..g.m {
        let lu = c.labels_u[u];
        let row = g.row(u);
        for (v, &w) in row.iter().enumerate() {
            match w {
                1 => {
                    if lu == c.labels_v[v] {
                        agreements += 1;
                    }
                }
                -1 => {
                    if lu != c.labels_v[v] {
                        agreements += 1;
                    }
                }
                _ => {}
            }
        }
    }
    Ok(agreements)
}

/// Merges every cluster containing only U-vertices into a single cluster and
/// every cluster containing only V-vertices into another; mixed clusters are
/// untouched. The agreement count is invariant under this operation, and the
/// output uses at most as many cluster ids as the input.
pub fn merge_single_sided(c: &Clustering) -> Clustering {
    let mut has_u = vec![false; c.k];
    let mut has_v = vec![false; c.k];
    for &l in &c.labels_u {
        has_u[l] = true;
    }
    for &l in &c.labels_v {
        has_v[l] = true;
    }
    // Old cluster id -> merge group: mixed ids stay distinct, all U-only ids
    // collapse together, all V-only ids collapse together.
    let mut group = vec![usize::MAX; c.k];
    let u_only_group = c.k;
    let v_only_group = c.k + 1;
    for id in 0..c.k {
        group[id] = match (has_u[id], has_v[id]) {
            (true, true) => id,
            (true, false) => u_only_group,
            (false, true) => v_only_group,
            (false, false) => id, // empty; unused by any vertex
        };
    }
    // Compact group ids in first-appearance order over (labels_u, labels_v).
    let mut new_id = vec![usize::MAX; c.k + 2];
    let mut next = 0usize;
    let mut relabel = |old: usize, new_id: &mut Vec<usize>| -> usize {
        let gr = group[old];
        if new_id[gr] == usize::MAX {
            new_id[gr] = next;
            next += 1;
        }
        new_id[gr]
    };
    let labels_u: Vec<usize> = c.labels_u.iter().map(|&l| relabel(l, &mut new_id)).collect();
    let labels_v: Vec<usize> = c.labels_v.iter().map(|&l| relabel(l, &mut new_id)).collect();
    Clustering {
        k: next.max(1),
        labels_u,
        labels_v,
    }
}
