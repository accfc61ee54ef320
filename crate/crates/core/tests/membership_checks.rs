//! Membership estimation checks: the embedding against exact rank-1
//! structure and concentration, and the 1-D clusterer against brute force.

use graph_evidence::graph::BlockAssignment;
use graph_evidence::membership::{ase_rank1, ase_rank1_of_matrix, cluster_1d, estimate_membership};
use graph_evidence::sample::{sample_er, sample_sbm_rank1};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn exact_rank_one_input_recovers_three_groups() {
    let mut positions = Vec::new();
    for i in 0..60 {
        positions.push(match i % 3 {
            0 => 0.2,
            1 => 0.5,
            _ => 0.85,
        });
    }
    let a = DMatrix::from_fn(60, 60, |i, j| positions[i] * positions[j]);
    let e = ase_rank1_of_matrix(&a).unwrap();
    let (labels, centroids) = cluster_1d(&e.values, 3).unwrap();
    for (i, &l) in labels.iter().enumerate() {
        assert_eq!(l, (i % 3) + 1, "vertex {i}");
        assert!((centroids[l - 1] - positions[i]).abs() < 1e-8);
    }
}

#[test]
fn er_embedding_concentrates_at_the_root_probability() {
    let p = 0.3;
    let g = sample_er(400, p, true, 31).unwrap();
    let e = ase_rank1(&g).unwrap();
    let n = e.values.len() as f64;
    let mean = e.values.iter().sum::<f64>() / n;
    let var = e.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    assert!(
        (mean - p.sqrt()).abs() < 0.02,
        "mean {mean} vs √p {}",
        p.sqrt()
    );
    assert!(var.sqrt() < 0.05, "std {}", var.sqrt());
}

#[test]
fn two_block_graphs_split_cleanly() {
    let truth = BlockAssignment::contiguous_balanced(200, 2).unwrap();
    for seed in 0..5u64 {
        let g = sample_sbm_rank1(&[0.2, 0.9], &truth, true, 400 + seed).unwrap();
        let est = estimate_membership(&g, 2).unwrap();
        let agreement = est.agreement(&truth);
        assert!(agreement >= 0.99, "seed {seed}: agreement {agreement}");
    }
}

fn sse_of(values: &[f64], labels: &[usize], k: usize) -> f64 {
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&v, &l) in values.iter().zip(labels.iter()) {
        sums[l - 1] += v;
        counts[l - 1] += 1;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(counts.iter())
        .map(|(&s, &c)| s / c as f64)
        .collect();
    values
        .iter()
        .zip(labels.iter())
        .map(|(&v, &l)| (v - means[l - 1]) * (v - means[l - 1]))
        .sum()
}

/// Minimum SSE over every split of the sorted values into k contiguous
/// nonempty segments, by explicit enumeration of the cut positions.
fn brute_force_sse(values: &[f64], k: usize) -> f64 {
    let mut sv = values.to_vec();
    sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sv.len();
    let seg_cost = |a: usize, b: usize| -> f64 {
        let seg = &sv[a..b];
        let mean = seg.iter().sum::<f64>() / seg.len() as f64;
        seg.iter().map(|v| (v - mean) * (v - mean)).sum()
    };
    let mut best = f64::INFINITY;
    let mut cuts: Vec<usize> = (1..k).collect();
    loop {
        let mut cost = 0.0;
        let mut prev = 0;
        for &c in &cuts {
            cost += seg_cost(prev, c);
            prev = c;
        }
        cost += seg_cost(prev, n);
        best = best.min(cost);
        // Advance the cut vector to the next strictly increasing tuple.
        let mut i = cuts.len();
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            cuts[i] += 1;
            if cuts[i] <= n - (cuts.len() - i) {
                for j in i + 1..cuts.len() {
                    cuts[j] = cuts[j - 1] + 1;
                }
                break;
            }
        }
        if cuts.is_empty() {
            return best;
        }
    }
}

#[test]
fn dynamic_program_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for trial in 0..300 {
        let n = 2 + rng.random_range(0..11usize);
        let values: Vec<f64> = (0..n)
            .map(|_| {
                if trial % 4 == 0 {
                    // Coarse grid forces ties.
                    (rng.random_range(0..5u32)) as f64
                } else {
                    rng.random::<f64>() * 10.0
                }
            })
            .collect();
        let mut distinct = values.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        let kmax = distinct.len().min(5);
        for k in 1..=kmax {
            let (labels, _) = cluster_1d(&values, k).unwrap();
            let dp = sse_of(&values, &labels, k);
            let bf = brute_force_sse(&values, k);
            assert!(
                (dp - bf).abs() < 1e-9 * bf.max(1.0),
                "n={n} k={k} values={values:?}: dp {dp} vs brute {bf}"
            );
        }
    }
}

#[test]
fn clustering_is_equivariant_under_negation() {
    let values = [0.4, -1.2, 3.1, 0.5, 2.9, -1.0, 0.45];
    let k = 3;
    let (labels, centroids) = cluster_1d(&values, k).unwrap();
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    let (nlabels, ncentroids) = cluster_1d(&negated, k).unwrap();
    for (&l, &nl) in labels.iter().zip(nlabels.iter()) {
        assert_eq!(nl, k + 1 - l);
    }
    for i in 0..k {
        assert!((ncentroids[i] + centroids[k - 1 - i]).abs() < 1e-12);
    }
}

#[test]
fn estimation_is_deterministic_across_runs() {
    let truth = BlockAssignment::contiguous_balanced(80, 2).unwrap();
    let g = sample_sbm_rank1(&[0.35, 0.75], &truth, false, 99).unwrap();
    let a = estimate_membership(&g, 2).unwrap();
    let b = estimate_membership(&g, 2).unwrap();
    assert_eq!(a.labels(), b.labels());
}
