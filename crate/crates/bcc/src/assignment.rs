//! Linear maximization over cluster-assignment matrices.
//!
//! For a d×k score matrix `L`, the 0/1 assignment matrix `X` with one 1 per
//! row that maximizes `Tr(XᵀL)` simply picks the per-row argmax; the same
//! routine serves both the left and the right assignment step.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::SignedBipartiteGraph;
use crate::linalg::LowRankFactors;

#[derive(Debug, Error)]
pub enum AssignError {
    #[error("NaN score at row {row}, column {col}: argmax undefined")]
    NanScore { row: usize, col: usize },
    #[error("score matrix must have at least one row and one column")]
    Empty,
    #[error("labels are {got} long, expected {expected}")]
    LabelLength { got: usize, expected: usize },
}

/// Per-row argmax with ties broken toward the smallest column index.
#[inline]
pub fn argmax_row(scores: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut best_j = None;
    for (j, s) in scores.enumerate() {
        if s.is_nan() {
            return None;
        }
        if best_j.is_none() || s > best {
            best = s;
            best_j = Some(j);
        }
    }
    best_j
}

/// Labels each row of `L` with its argmax column. Rejects NaN entries.
pub fn assign_rows(l: &DMatrix<f64>) -> Result<Vec<usize>, AssignError> {
    let (d, k) = l.shape();
    if d == 0 || k == 0 {
        return Err(AssignError::Empty);
    }
    let mut labels = Vec::with_capacity(d);
    for i in 0..d {
        match argmax_row((0..k).map(|j| l[(i, j)])) {
            Some(j) => labels.push(j),
            None => {
                let col = (0..k).position(|j| l[(i, j)].is_nan()).unwrap_or(0);
                return Err(AssignError::NanScore { row: i, col });
            }
        }
    }
    Ok(labels)
}

/// Objective value the assignment achieves: `Tr(XᵀL) = Σ_i L[i][label_i]`.
pub fn assignment_objective(l: &DMatrix<f64>, labels: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &j)| l[(i, j)])
        .sum()
}

/// `Tr(XᵀBY)` evaluated directly on the graph; integer-exact for ±1/0
/// weights. Only labeled pairs contribute.
pub fn bilinear_objective(
    g: &SignedBipartiteGraph,
    labels_u: &[usize],
    labels_v: &[usize],
) -> Result<i64, AssignError> {
    if labels_u.len() != g.m() {
        return Err(AssignError::LabelLength {
            got: labels_u.len(),
            expected: g.m(),
        });
    }
    if labels_v.len() != g.n() {
        return Err(AssignError::LabelLength {
            got: labels_v.len(),
            expected: g.n(),
        });
    }
    let mut total = 0i64;
    for (u, &lu) in labels_u.iter().enumerate() {
        for (v, &w) in g.row(u).iter().enumerate() {
            if w != 0 && lu == labels_v[v] {
                total += w as i64;
            }
        }
    }
    Ok(total)
}

/// `Tr(XᵀÃY)` via the factored form `(XᵀUΣ)(VᵀY)`, never materializing the
/// reconstructed matrix.
pub fn bilinear_objective_factored(
    f: &LowRankFactors,
    labels_u: &[usize],
    labels_v: &[usize],
    k: usize,
) -> Result<f64, AssignError> {
    if labels_u.len() != f.m() {
        return Err(AssignError::LabelLength {
            got: labels_u.len(),
            expected: f.m(),
        });
    }
    if labels_v.len() != f.n() {
        return Err(AssignError::LabelLength {
            got: labels_v.len(),
            expected: f.n(),
        });
    }
    let r = f.rank();
    let us = f.u_scaled(); // m×r, already multiplied by the singular values
    let v = f.v_factor(); // n×r
    let mut left = vec![0.0f64; k * r]; // (XᵀUΣ), k×r row-major
    for (i, &l) in labels_u.iter().enumerate() {
        for t in 0..r {
            left[l * r + t] += us[(i, t)];
        }
    }
    let mut right = vec![0.0f64; k * r]; // (YᵀV), k×r row-major
    for (j, &l) in labels_v.iter().enumerate() {
        for t in 0..r {
            right[l * r + t] += v[(j, t)];
        }
    }
    let mut total = 0.0;
    for l in 0..k {
        for t in 0..r {
            total += left[l * r + t] * right[l * r + t];
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_planted;
    use crate::linalg::truncated_svd;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_dominance() {
        let l = dmatrix![1.0, 0.0; 0.0, 2.0];
        let labels = assign_rows(&l).unwrap();
        assert_eq!(labels, vec![0, 1]);
        assert_eq!(assignment_objective(&l, &labels), 3.0);
    }

    #[test]
    fn tie_goes_to_smallest_index() {
        let l = dmatrix![5.0, 5.0];
        assert_eq!(assign_rows(&l).unwrap(), vec![0]);
    }

    #[test]
    fn nan_rejected() {
        let l = dmatrix![1.0, f64::NAN];
        assert!(matches!(
            assign_rows(&l),
            Err(AssignError::NanScore { row: 0, col: 1 })
        ));
    }

    fn exhaustive_max(l: &DMatrix<f64>) -> f64 {
        let (d, k) = l.shape();
        let total = k.pow(d as u32);
        let mut best = f64::NEG_INFINITY;
        for code in 0..total {
            let mut c = code;
            let mut obj = 0.0;
            for i in 0..d {
                obj += l[(i, c % k)];
                c /= k;
            }
            best = best.max(obj);
        }
        best
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let d = rng.gen_range(1..=4usize);
            let k = rng.gen_range(1..=3usize);
            let l = DMatrix::from_fn(d, k, |_, _| rng.gen_range(-3.0..3.0));
            let labels = assign_rows(&l).unwrap();
            let got = assignment_objective(&l, &labels);
            assert!((got - exhaustive_max(&l)).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_decomposes_over_row_maxima() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let l = DMatrix::from_fn(5, 3, |_, _| rng.gen_range(-1.0..1.0));
        let labels = assign_rows(&l).unwrap();
        let row_max_sum: f64 = (0..5)
            .map(|i| (0..3).map(|j| l[(i, j)]).fold(f64::NEG_INFINITY, f64::max))
            .sum();
        assert!((assignment_objective(&l, &labels) - row_max_sum).abs() < 1e-12);
    }

    #[test]
    fn column_permutation_permutes_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let d = rng.gen_range(1..=5usize);
            let k = rng.gen_range(2..=4usize);
            // Distinct entries so the argmax is permutation-equivariant
            // without tie effects.
            let l = DMatrix::from_fn(d, k, |i, j| (i * k + j) as f64 + rng.gen_range(0.0..0.5));
            let mut perm: Vec<usize> = (0..k).collect();
            for i in (1..k).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let lp = DMatrix::from_fn(d, k, |i, j| l[(i, perm[j])]);
            let base = assign_rows(&l).unwrap();
            let permuted = assign_rows(&lp).unwrap();
            for i in 0..d {
                assert_eq!(perm[permuted[i]], base[i]);
            }
        }
    }

    #[test]
    fn bilinear_objective_hand_cases() {
        let g = crate::graph::SignedBipartiteGraph::from_dense(2, 2, vec![1, 1, 1, 1]).unwrap();
        assert_eq!(bilinear_objective(&g, &[0, 0], &[0, 0]).unwrap(), 4);
        let g = crate::graph::SignedBipartiteGraph::from_dense(2, 2, vec![1, -1, -1, 1]).unwrap();
        assert_eq!(bilinear_objective(&g, &[0, 1], &[0, 1]).unwrap(), 2);
    }

    #[test]
    fn graph_and_factored_forms_agree_at_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for trial in 0..20 {
            let (g, _) = generate_planted(6, 5, 2, 0.4, 100 + trial).unwrap();
            let f = truncated_svd(&g, 5, 7).unwrap();
            let k = 3;
            let lu: Vec<usize> = (0..6).map(|_| rng.gen_range(0..k)).collect();
            let lv: Vec<usize> = (0..5).map(|_| rng.gen_range(0..k)).collect();
            let exact = bilinear_objective(&g, &lu, &lv).unwrap() as f64;
            let approx = bilinear_objective_factored(&f, &lu, &lv, k).unwrap();
            assert!(
                (exact - approx).abs() < 1e-8,
                "trial {trial}: exact {exact} vs factored {approx}"
            );
        }
    }
}
