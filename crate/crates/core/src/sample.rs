//! Seeded samplers for the three generative models.
//!
//! Every sampler draws the admissible pairs in canonical order from a
//! ChaCha8 stream, so a (inputs, seed) pair fully determines the graph.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{BlockAssignment, Graph};

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the open interval (0, 1).
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Samples a graph with every admissible edge present independently with
/// probability `p`.
pub fn sample_er(n_v: usize, p: f64, loops_allowed: bool, seed: u64) -> Result<Graph> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("edge probability {p} outside (0,1)")));
    }
    let mut g = Graph::empty(n_v, loops_allowed)?;
    let mut rng = rng_for(seed);
    let pairs: Vec<_> = g.pairs().collect();
    for (i, j) in pairs {
        if rng.random::<f64>() < p {
            g.set_edge(i, j, true);
        }
    }
    Ok(g)
}

/// Samples a graph with edge {i, j} present independently with probability
/// `p[(i, j)]`. The matrix must be symmetric with entries in (0, 1).
pub fn sample_ie(p: &DMatrix<f64>, loops_allowed: bool, seed: u64) -> Result<Graph> {
    let n_v = p.nrows();
    if p.ncols() != n_v {
        return Err(Error::Domain("probability matrix must be square".into()));
    }
    for i in 0..n_v {
        for j in 0..n_v {
            let v = p[(i, j)];
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Domain(format!(
                    "probability entry ({},{}) = {} outside (0,1)",
                    i + 1,
                    j + 1,
                    v
                )));
            }
            if p[(i, j)] != p[(j, i)] {
                return Err(Error::Domain(format!(
                    "probability matrix not symmetric at ({},{})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let mut g = Graph::empty(n_v, loops_allowed)?;
    let mut rng = rng_for(seed);
    let pairs: Vec<_> = g.pairs().collect();
    for (i, j) in pairs {
        if rng.random::<f64>() < p[(i, j)] {
            g.set_edge(i, j, true);
        }
    }
    Ok(g)
}

/// Samples a rank-1 blockmodel graph: edge {i, j} is present with
/// probability x[block(i)] · x[block(j)].
pub fn sample_sbm_rank1(
    x: &[f64],
    assignment: &BlockAssignment,
    loops_allowed: bool,
    seed: u64,
) -> Result<Graph> {
    if x.len() != assignment.k() {
        return Err(Error::Domain(format!(
            "{} latent positions for {} blocks",
            x.len(),
            assignment.k()
        )));
    }
    for &v in x {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Domain(format!("latent position {v} outside (0,1)")));
        }
    }
    let mut g = Graph::empty(assignment.n_v(), loops_allowed)?;
    let mut rng = rng_for(seed);
    let pairs: Vec<_> = g.pairs().collect();
    for (i, j) in pairs {
        let pij = x[assignment.label(i) - 1] * x[assignment.label(j) - 1];
        if rng.random::<f64>() < pij {
            g.set_edge(i, j, true);
        }
    }
    Ok(g)
}

/// A random symmetric probability matrix with independent entries drawn
/// uniformly from (0, 1); the generating distribution of the
/// independent-edge recovery experiment.
pub fn random_probability_matrix(n_v: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_for(seed);
    let mut m = DMatrix::zeros(n_v, n_v);
    for i in 0..n_v {
        for j in i..n_v {
            let u = open_unit(&mut rng);
            m[(i, j)] = u;
            m[(j, i)] = u;
        }
    }
    m
}
