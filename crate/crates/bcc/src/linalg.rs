//! Rank-r truncated SVD of the bi-adjacency matrix and spectral diagnostics.
//!
//! The decomposition runs randomized subspace iteration with oversampling 8:
//! the graph is dense and small at the scales we target, and the method is
//! straightforward to make deterministic from a seed.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::graph::SignedBipartiteGraph;

const OVERSAMPLE: usize = 8;
const MAX_ITERATIONS: usize = 200;
const CONVERGENCE_RTOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("rank {r} out of range 1..={max} for {m}x{n} matrix")]
    RankOutOfRange {
        r: usize,
        max: usize,
        m: usize,
        n: usize,
    },
    #[error(
        "singular values did not settle after {iterations} iterations \
         (residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Rank-r factorization `UΣVᵀ` with orthonormal `U` (m×r) and `V` (n×r) and
/// nonincreasing nonnegative singular values.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    u_factor: DMatrix<f64>,
    singular_values: DVector<f64>,
    v_factor: DMatrix<f64>,
    u_scaled: DMatrix<f64>,
}

impl LowRankFactors {
    fn new(u: DMatrix<f64>, sigma: DVector<f64>, v: DMatrix<f64>) -> Self {
        let mut u_scaled = u.clone();
        for (t, mut col) in u_scaled.column_iter_mut().enumerate() {
            col *= sigma[t];
        }
        Self {
            u_factor: u,
            singular_values: sigma,
            v_factor: v,
            u_scaled,
        }
    }

    pub fn m(&self) -> usize {
        self.u_factor.nrows()
    }

    pub fn n(&self) -> usize {
        self.v_factor.nrows()
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Left factor `U`, orthonormal columns.
    pub fn u_factor(&self) -> &DMatrix<f64> {
        &self.u_factor
    }

    /// Right factor `V`, orthonormal columns.
    pub fn v_factor(&self) -> &DMatrix<f64> {
        &self.v_factor
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    /// `UΣ`, the columns of `U` scaled by the singular values.
    pub fn u_scaled(&self) -> &DMatrix<f64> {
        &self.u_scaled
    }

    /// Largest singular value of the factorization.
    pub fn spectral_norm(&self) -> f64 {
        if self.singular_values.is_empty() {
            0.0
        } else {
            self.singular_values[0]
        }
    }
}

/// For a ±1/0 matrix the Frobenius norm is the square root of the number of
/// labeled pairs.
pub fn frobenius_norm(g: &SignedBipartiteGraph) -> f64 {
    (g.nonzero_count() as f64).sqrt()
}

/// Largest singular value read from computed factors.
pub fn spectral_norm_estimate(f: &LowRankFactors) -> f64 {
    f.spectral_norm()
}

fn dense_matrix(g: &SignedBipartiteGraph) -> DMatrix<f64> {
    DMatrix::from_fn(g.m(), g.n(), |i, j| g.weight(i, j) as f64)
}

fn thin_q(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().qr().q()
}

/// Singular values (descending) and factors of a small dense matrix, sorted.
fn small_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let sigma = svd.singular_values;
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).expect("non-NaN"));
    let u_sorted = DMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let v_sorted = DMatrix::from_fn(vt.ncols(), order.len(), |i, j| vt[(order[j], i)]);
    let s_sorted = DVector::from_fn(order.len(), |j, _| sigma[order[j]]);
    (u_sorted, s_sorted, v_sorted)
}

/// Top-r singular triple of the bi-adjacency matrix via seeded randomized
/// subspace iteration. Deterministic given `(g, r, seed)`.
pub fn truncated_svd(
    g: &SignedBipartiteGraph,
    r: usize,
    seed: u64,
) -> Result<LowRankFactors, LinalgError> {
    let (m, n) = (g.m(), g.n());
    let max = m.min(n);
    if r == 0 || r > max {
        return Err(LinalgError::RankOutOfRange { r, max, m, n });
    }
    if g.nonzero_count() == 0 {
        // All-zero matrix: any orthonormal factors with zero singular values.
        let u = DMatrix::from_fn(m, r, |i, j| if i == j { 1.0 } else { 0.0 });
        let v = DMatrix::from_fn(n, r, |i, j| if i == j { 1.0 } else { 0.0 });
        return Ok(LowRankFactors::new(u, DVector::zeros(r), v));
    }
    let b = dense_matrix(g);
    let l = (r + OVERSAMPLE).min(max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let gauss = DMatrix::from_fn(n, l, |_, _| normal.sample(&mut rng));

    let mut q = thin_q(&(&b * &gauss));
    let mut p = DMatrix::zeros(n, l);
    let mut prev: Option<DVector<f64>> = None;
    let mut residual = f64::INFINITY;
    for iteration in 0..MAX_ITERATIONS {
        p = thin_q(&(b.transpose() * &q));
        let w = &b * &p;
        let qr = w.qr();
        q = qr.q();
        let rr = qr.r();
        let (_, sigma, _) = small_svd(&rr);
        let estimates = DVector::from_fn(r, |i, _| sigma[i]);
        if let Some(last) = &prev {
            residual = (0..r)
                .map(|i| {
                    let scale = estimates[i].abs().max(1e-30);
                    (estimates[i] - last[i]).abs() / scale
                })
                .fold(0.0f64, f64::max);
            if residual < CONVERGENCE_RTOL && iteration >= 1 {
                prev = Some(estimates);
                break;
            }
        }
        prev = Some(estimates);
        if iteration == MAX_ITERATIONS - 1 {
            return Err(LinalgError::NoConvergence {
                iterations: MAX_ITERATIONS,
                residual,
            });
        }
    }
    // B·P = Q·R, so B ≈ Q R Pᵀ on the converged subspace; the SVD of the
    // small R yields the final triple.
    let product = q.transpose() * &b * &p; // l×l, equals R up to signs
    let (w, sigma, z) = small_svd(&product);
    let u_full = &q * &w;
    let v_full = &p * &z;
    let u = u_full.columns(0, r).into_owned();
    let v = v_full.columns(0, r).into_owned();
    let s = DVector::from_fn(r, |i, _| sigma[i].max(0.0));
    Ok(LowRankFactors::new(u, s, v))
}

/// Spectral norm of `B - UΣVᵀ` by power iteration on the implicit residual;
/// the reconstruction is never materialized.
pub fn residual_spectral_norm(g: &SignedBipartiteGraph, f: &LowRankFactors, seed: u64) -> f64 {
    let b = dense_matrix(g);
    let apply = |x: &DVector<f64>| -> DVector<f64> {
        // (B - UΣVᵀ) x
        let bx = &b * x;
        let vx = f.v_factor().transpose() * x;
        let mut corr = DVector::zeros(f.m());
        for t in 0..f.rank() {
            let scale = vx[t];
            corr += f.u_scaled().column(t) * scale;
        }
        bx - corr
    };
    let apply_t = |y: &DVector<f64>| -> DVector<f64> {
        let bty = b.transpose() * y;
        let uy = f.u_scaled().transpose() * y;
        let mut corr = DVector::zeros(f.n());
        for t in 0..f.rank() {
            let scale = uy[t];
            corr += f.v_factor().column(t) * scale;
        }
        bty - corr
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut x = DVector::from_fn(f.n(), |_, _| normal.sample(&mut rng));
    let mut norm = 0.0;
    for _ in 0..300 {
        let y = apply(&x);
        let yn = y.norm();
        if yn < 1e-300 {
            return 0.0;
        }
        let z = apply_t(&(y / yn));
        norm = z.norm();
        if norm < 1e-300 {
            return 0.0;
        }
        x = z / norm;
    }
    norm
}
