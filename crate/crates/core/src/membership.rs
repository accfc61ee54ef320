//! Block membership estimation: a rank-1 adjacency spectral embedding
//! followed by exact 1-D k-means on the embedded values.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{BlockAssignment, Graph};

/// Rank-1 spectral embedding of a symmetric matrix: each vertex maps to
/// uᵢ·√σ where (σ, u) is the dominant eigenpair by absolute value.
#[derive(Clone, Debug)]
pub struct Embedding {
    /// Per-vertex embedded values, sign-normalized so their sum is ≥ 0.
    pub values: Vec<f64>,
    /// Dominant absolute eigenvalue of the matrix.
    pub sigma: f64,
}

const POWER_SEED: u64 = 0x5eed_0001;
const POWER_MAX_ITER: usize = 10_000;
const POWER_RESIDUAL_TOL: f64 = 1e-8;

/// Embedding of a graph's adjacency matrix. Errors on edgeless graphs,
/// which carry no rank-1 signal.
pub fn ase_rank1(graph: &Graph) -> Result<Embedding> {
    if graph.is_edgeless() {
        return Err(Error::Domain(
            "cannot embed an edgeless graph: the adjacency matrix is zero".into(),
        ));
    }
    ase_rank1_of_matrix(&graph.to_dense())
}

/// Embedding of an arbitrary symmetric matrix; exposed so exact rank-1
/// inputs can bypass sampling noise in tests.
pub fn ase_rank1_of_matrix(a: &DMatrix<f64>) -> Result<Embedding> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Domain("embedding needs a square matrix".into()));
    }
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::Domain("cannot embed the zero matrix".into()));
    }
    // Power iteration on A², which is positive semidefinite: the iteration
    // cannot oscillate between ±λ, and the fixed seed keeps reruns
    // bit-identical.
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    let norm = v.norm();
    v /= norm;
    let mut lam2 = 0.0;
    let mut settled = false;
    for _ in 0..POWER_MAX_ITER {
        let av = a * &v;
        lam2 = av.norm_squared();
        let w = a * &av;
        let resid = (&w - &v * lam2).norm();
        if lam2 > 0.0 && resid <= POWER_RESIDUAL_TOL * lam2 {
            settled = true;
            break;
        }
        let wnorm = w.norm();
        if wnorm == 0.0 {
            // Unlucky start orthogonal to the range; redraw.
            v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
            let norm = v.norm();
            v /= norm;
            continue;
        }
        v = w / wnorm;
    }
    if !settled {
        return Err(Error::Numeric(
            "power iteration did not reach the residual tolerance".into(),
        ));
    }
    let sigma = lam2.sqrt();
    let scale = sigma.sqrt();
    let mut values: Vec<f64> = v.iter().map(|&u| u * scale).collect();
    if values.iter().sum::<f64>() < 0.0 {
        for u in &mut values {
            *u = -*u;
        }
    }
    Ok(Embedding { values, sigma })
}

/// Exact 1-D k-means: sorts, then dynamic programming over contiguous
/// segments, which contains an optimal clustering in one dimension.
/// Returns per-value labels in 1..=k plus the k centroids in ascending
/// order (label i+1 has centroid i). Ties between split points resolve to
/// the smallest split. Errors when k exceeds the number of distinct values.
pub fn cluster_1d(values: &[f64], k: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = values.len();
    if k == 0 {
        return Err(Error::Domain("need at least one cluster".into()));
    }
    if n == 0 {
        return Err(Error::Domain("no values to cluster".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("values must be finite".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let sv: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let distinct = 1 + sv.windows(2).filter(|w| w[0] != w[1]).count();
    if k > distinct {
        return Err(Error::Domain(format!(
            "cannot form {k} clusters from {distinct} distinct values"
        )));
    }

    let mut ps = vec![0.0; n + 1];
    let mut pq = vec![0.0; n + 1];
    for (i, &v) in sv.iter().enumerate() {
        ps[i + 1] = ps[i] + v;
        pq[i + 1] = pq[i] + v * v;
    }
    // Within-segment sum of squared deviations for sv[a..b].
    let cost = |a: usize, b: usize| -> f64 {
        let len = (b - a) as f64;
        let s = ps[b] - ps[a];
        (pq[b] - pq[a] - s * s / len).max(0.0)
    };

    let mut dp = vec![vec![f64::INFINITY; n + 1]; k + 1];
    let mut arg = vec![vec![0usize; n + 1]; k + 1];
    for (b, slot) in dp[1].iter_mut().enumerate().skip(1) {
        *slot = cost(0, b);
    }
    for j in 2..=k {
        for b in j..=n {
            for a in (j - 1)..b {
                let c = dp[j - 1][a] + cost(a, b);
                if c < dp[j][b] {
                    dp[j][b] = c;
                    arg[j][b] = a;
                }
            }
        }
    }

    let mut bounds = vec![0usize; k + 1];
    bounds[k] = n;
    for j in (2..=k).rev() {
        bounds[j - 1] = arg[j][bounds[j]];
    }
    let mut labels = vec![0usize; n];
    let mut centroids = vec![0.0; k];
    for t in 0..k {
        let (a, b) = (bounds[t], bounds[t + 1]);
        centroids[t] = (ps[b] - ps[a]) / (b - a) as f64;
        for &orig in &idx[a..b] {
            labels[orig] = t + 1;
        }
    }
    Ok((labels, centroids))
}

/// Estimates a K-block membership from the graph alone: embed, then
/// cluster the embedded values. K = 1 short-circuits to the single block.
pub fn estimate_membership(graph: &Graph, k: usize) -> Result<BlockAssignment> {
    if k == 0 {
        return Err(Error::Domain("need at least one block".into()));
    }
    if k == 1 {
        return Ok(BlockAssignment::single_block(graph.n_v()));
    }
    let emb = ase_rank1(graph)?;
    let (labels, _) = cluster_1d(&emb.values, k)?;
    BlockAssignment::new(labels, k)
}
