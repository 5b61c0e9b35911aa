//! Candidate matrices whose columns cover the unit ℓ2-ball.
//!
//! Exact mode enumerates the Cartesian product of a finite covering net over
//! the k columns; sampled mode draws columns uniformly from the ball. Either
//! way, candidate `i` is a pure function of `(seed, i)`, so streams can be
//! split into disjoint index ranges for parallel consumption.
//!
//! Net construction: an axis-aligned grid of spacing `2ε/√r` on `[-1, 1]^r`.
//! Grid vertices inside the ball are kept as-is; a vertex outside the ball
//! whose grid cell still intersects the ball is replaced by its radial
//! projection onto the sphere. Projection onto a convex set is a contraction,
//! so every ball point stays within ε of some kept point, and the point count
//! stays within the `(1 + 2√r/ε)^r` covering scale.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Default refusal threshold for the exact-mode candidate product.
pub const DEFAULT_CANDIDATE_CAP: u64 = 1_000_000_000;

/// Refusal threshold for the raw grid scan that builds the net.
const GRID_SCAN_CAP: u128 = 100_000_000;

#[derive(Debug, Error)]
pub enum EpsNetError {
    #[error("epsilon must be positive and at most 1 (got {eps})")]
    BadEps { eps: f64 },
    #[error("dimension must be at least 1")]
    BadDimension,
    #[error("sampling budget must be at least 1")]
    ZeroBudget,
    #[error(
        "exact candidate product ~{estimate} exceeds the cap of {cap}; \
         use a coarser epsilon, a smaller rank, or sampled mode"
    )]
    ProductTooLarge { estimate: u128, cap: u64 },
}

/// Candidate generation mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CandidateMode {
    /// Full Cartesian product of the ε-net over the k columns.
    Exact { eps: f64 },
    /// `budget` matrices with columns drawn uniformly from the unit ball.
    Sampled { budget: u64 },
}

/// An r×k real matrix whose columns lie in the unit ℓ2-ball.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMatrix {
    r: usize,
    k: usize,
    /// Column-major entries.
    entries: Vec<f64>,
}

impl CandidateMatrix {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.entries[j * self.r..(j + 1) * self.r]
    }

    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.k)
            .map(|j| self.column(j).iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }
}

/// Finite covering net of the unit ball in `r` dimensions: every point of the
/// ball lies within `eps` (ℓ2) of some net point, and every net point lies in
/// the ball.
#[derive(Debug, Clone)]
pub struct EpsNet {
    r: usize,
    /// Flat point storage, `r` entries per point.
    points: Vec<f64>,
}

impl EpsNet {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.r
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.r..(i + 1) * self.r]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

/// Builds the covering net for the unit ball in `r` dimensions.
pub fn net_points(r: usize, eps: f64) -> Result<EpsNet, EpsNetError> {
    if r == 0 {
        return Err(EpsNetError::BadDimension);
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(EpsNetError::BadEps { eps });
    }
    let h = 2.0 * eps / (r as f64).sqrt();
    let half_steps = (1.0 / h).ceil() as i64;
    let per_axis = (2 * half_steps + 1) as u128;
    let grid_total = per_axis.checked_pow(r as u32).unwrap_or(u128::MAX);
    if grid_total > GRID_SCAN_CAP {
        return Err(EpsNetError::ProductTooLarge {
            estimate: grid_total,
            cap: GRID_SCAN_CAP as u64,
        });
    }
    let mut points = Vec::new();
    let mut idx = vec![-half_steps; r];
    let mut coords = vec![0.0f64; r];
    'outer: loop {
        for (c, &j) in coords.iter_mut().zip(idx.iter()) {
            *c = j as f64 * h;
        }
        let norm2: f64 = coords.iter().map(|x| x * x).sum();
        if norm2 <= 1.0 {
            points.extend_from_slice(&coords);
        } else {
            // Keep the radial projection when the vertex's grid cell still
            // intersects the ball; the nearest cell point to the origin
            // shrinks each coordinate by half a step.
            let cell2: f64 = coords
                .iter()
                .map(|x| (x.abs() - h / 2.0).max(0.0).powi(2))
                .sum();
            if cell2 <= 1.0 {
                let norm = norm2.sqrt();
                points.extend(coords.iter().map(|x| x / norm));
            }
        }
        // Odometer increment over the grid indices.
        for d in 0..r {
            if idx[d] < half_steps {
                idx[d] += 1;
                continue 'outer;
            }
            idx[d] = -half_steps;
        }
        break;
    }
    Ok(EpsNet { r, points })
}

/// Number of candidates the given mode would produce for an r×k problem.
/// Errors if the exact product exceeds `cap` (default [`DEFAULT_CANDIDATE_CAP`]).
pub fn candidate_count(
    r: usize,
    k: usize,
    mode: CandidateMode,
    cap: Option<u64>,
) -> Result<u64, EpsNetError> {
    match mode {
        CandidateMode::Sampled { budget } => {
            if budget == 0 {
                return Err(EpsNetError::ZeroBudget);
            }
            Ok(budget)
        }
        CandidateMode::Exact { eps } => {
            let net = net_points(r, eps)?;
            exact_product(&net, k, cap)
        }
    }
}

/// Exact-mode product size with the blow-up guard applied.
pub fn exact_product(net: &EpsNet, k: usize, cap: Option<u64>) -> Result<u64, EpsNetError> {
    let cap = cap.unwrap_or(DEFAULT_CANDIDATE_CAP);
    let product = (net.len() as u128)
        .checked_pow(k as u32)
        .unwrap_or(u128::MAX);
    if product > cap as u128 {
        return Err(EpsNetError::ProductTooLarge {
            estimate: product,
            cap,
        });
    }
    Ok(product as u64)
}

/// Decodes exact-mode candidate `index` into its k net-point indices
/// (least-significant digit first).
#[inline]
pub fn decode_exact(index: u64, net_len: u64, k: usize, out: &mut [usize]) {
    let mut rest = index;
    for slot in out.iter_mut().take(k) {
        *slot = (rest % net_len) as usize;
        rest /= net_len;
    }
}

/// Fills `entries` (column-major, r×k) with columns drawn uniformly from the
/// unit ball: normalized Gaussian vectors scaled by U^(1/r). Pure in
/// `(seed, index)` — candidate streams can be consumed out of order.
pub fn sampled_candidate_into(seed: u64, index: u64, r: usize, k: usize, entries: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let normal = StandardNormal;
    for j in 0..k {
        let col = &mut entries[j * r..(j + 1) * r];
        loop {
            let mut norm2 = 0.0;
            for slot in col.iter_mut() {
                let z: f64 = normal.sample(&mut rng);
                *slot = z;
                norm2 += z * z;
            }
            if norm2 > 1e-24 {
                let radius: f64 = rng.gen::<f64>().powf(1.0 / r as f64);
                let scale = radius / norm2.sqrt();
                for slot in col.iter_mut() {
                    *slot *= scale;
                }
                break;
            }
            // Degenerate Gaussian draw; redraw deterministically.
        }
    }
}

/// Lazily streams candidate matrices for the given mode. The stream order is
/// fixed: candidate `i` depends only on `(seed, i)` and, in exact mode, on
/// the net.
pub struct CandidateStream {
    r: usize,
    k: usize,
    seed: u64,
    total: u64,
    next: u64,
    net: Option<EpsNet>,
}

impl CandidateStream {
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Builds candidate `index` without advancing the stream.
    pub fn candidate(&self, index: u64) -> CandidateMatrix {
        let mut entries = vec![0.0f64; self.r * self.k];
        match &self.net {
            Some(net) => {
                let mut digits = vec![0usize; self.k];
                decode_exact(index, net.len() as u64, self.k, &mut digits);
                for (j, &d) in digits.iter().enumerate() {
                    entries[j * self.r..(j + 1) * self.r].copy_from_slice(net.point(d));
                }
            }
            None => {
                sampled_candidate_into(self.seed, index, self.r, self.k, &mut entries);
            }
        }
        CandidateMatrix {
            r: self.r,
            k: self.k,
            entries,
        }
    }

    pub fn net(&self) -> Option<&EpsNet> {
        self.net.as_ref()
    }
}

impl Iterator for CandidateStream {
    type Item = CandidateMatrix;

    fn next(&mut self) -> Option<CandidateMatrix> {
        if self.next >= self.total {
            return None;
        }
        let c = self.candidate(self.next);
        self.next += 1;
        Some(c)
    }
}

/// Opens a candidate stream. Exact mode enumerates the full net product (and
/// refuses oversized products); sampled mode yields `budget` seeded draws.
pub fn candidate_stream(
    r: usize,
    k: usize,
    mode: CandidateMode,
    seed: u64,
    cap: Option<u64>,
) -> Result<CandidateStream, EpsNetError> {
    if r == 0 {
        return Err(EpsNetError::BadDimension);
    }
    match mode {
        CandidateMode::Exact { eps } => {
            let net = net_points(r, eps)?;
            let total = exact_product(&net, k, cap)?;
            Ok(CandidateStream {
                r,
                k,
                seed,
                total,
                next: 0,
                net: Some(net),
            })
        }
        CandidateMode::Sampled { budget } => {
            if budget == 0 {
                return Err(EpsNetError::ZeroBudget);
            }
            Ok(CandidateStream {
                r,
                k,
                seed,
                total: budget,
                next: 0,
                net: None,
            })
        }
    }
}
