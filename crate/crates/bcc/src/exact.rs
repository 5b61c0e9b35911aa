//! Brute-force optimum for small instances: enumerate every partition of the
//! m+n vertices into at most k blocks and maximize the agreement count.
//!
//! Partitions are emitted exactly once as restricted growth strings: the
//! first element gets label 0 and each later label is at most one more than
//! the maximum label before it.

use thiserror::Error;

use crate::graph::{count_agreements, Clustering, SignedBipartiteGraph};

/// Enumeration guard: sum of Stirling numbers above this is refused.
pub const MAX_PARTITIONS: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("enumeration of ~{estimate} partitions exceeds the {limit} guard")]
    TooManyPartitions { estimate: u128, limit: u128 },
    #[error("need at least one element and one block")]
    Empty,
}

/// Number of partitions of `v_count` items into at most `k` nonempty blocks,
/// saturating at u128::MAX.
pub fn partition_count(v_count: usize, k: usize) -> u128 {
    // Stirling numbers of the second kind, S(i, j), computed row by row.
    let kk = k.min(v_count);
    let mut row = vec![0u128; kk + 1];
    row[0] = 1; // S(0, 0)
    for i in 1..=v_count {
        for j in (1..=kk.min(i)).rev() {
            let jj = j as u128;
            row[j] = jj
                .saturating_mul(row[j])
                .saturating_add(if j >= 1 { row[j - 1] } else { 0 });
        }
        row[0] = 0;
    }
    row[1..=kk].iter().fold(0u128, |a, &b| a.saturating_add(b))
}

/// Iterator over restricted growth strings of length `v_count` with labels
/// below `k`. Each emitted slice is a canonical set partition.
pub struct PartitionIter {
    labels: Vec<usize>,
    prefix_max: Vec<usize>,
    k: usize,
    started: bool,
    done: bool,
}

impl PartitionIter {
    fn new(v_count: usize, k: usize) -> Self {
        Self {
            labels: vec![0; v_count],
            prefix_max: vec![0; v_count],
            k,
            started: false,
            done: false,
        }
    }

    /// Advances to the next partition; returns false when exhausted.
    pub fn advance(&mut self) -> bool {
        if self.done {
            return false;
        }
        if !self.started {
            self.started = true;
            return true; // all-zeros string
        }
        let n = self.labels.len();
        // Find the rightmost position whose label can still grow: it must
        // stay <= prefix_max + 1 and below k.
        let mut i = n;
        while i > 1 {
            i -= 1;
            let cap = (self.prefix_max[i - 1] + 1).min(self.k - 1);
            if self.labels[i] < cap {
                self.labels[i] += 1;
                for j in i + 1..n {
                    self.labels[j] = 0;
                }
                for j in i..n {
                    self.prefix_max[j] = self.prefix_max[j - 1].max(self.labels[j]);
                }
                return true;
            }
        }
        self.done = true;
        false
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Streams every set partition of `v_count` items into at most `k` blocks.
/// Refuses when the partition count exceeds [`MAX_PARTITIONS`].
pub fn enumerate_clusterings(v_count: usize, k: usize) -> Result<PartitionIter, ExactError> {
    if v_count == 0 || k == 0 {
        return Err(ExactError::Empty);
    }
    let estimate = partition_count(v_count, k);
    if estimate > MAX_PARTITIONS {
        return Err(ExactError::TooManyPartitions {
            estimate,
            limit: MAX_PARTITIONS,
        });
    }
    Ok(PartitionIter::new(v_count, k))
}

/// Global maximum of the agreement count over all clusterings of `U ∪ V`
/// into at most `k` clusters. Joint partitions of the m+n vertices subsume
/// every pair of per-side assignment matrices.
pub fn max_agree_exact(
    g: &SignedBipartiteGraph,
    k: usize,
) -> Result<(u64, Clustering), ExactError> {
    let m = g.m();
    let n = g.n();
    let mut iter = enumerate_clusterings(m + n, k)?;
    let mut best: Option<(u64, Clustering)> = None;
    while iter.advance() {
        let labels = iter.labels();
        let c = Clustering {
            k,
            labels_u: labels[..m].to_vec(),
            labels_v: labels[m..].to_vec(),
        };
        let agreements = count_agreements(g, &c).expect("labels constructed in range");
        if best.as_ref().map_or(true, |(b, _)| agreements > *b) {
            best = Some((agreements, c));
        }
    }
    Ok(best.expect("at least one partition exists"))
}
