//! Lloyd's k-means with k-means++ seeding, deterministic for a fixed seed at
//! any thread count.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, DenseMatrix};

use super::ClusterAssignment;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KmeansOptions {
    pub seed: u64,
    pub max_iters: usize,
    /// Independent k-means++ starts; the run with the lowest inertia wins
    /// (ties keep the earliest start).
    pub restarts: usize,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            max_iters: 100,
            restarts: 1,
        }
    }
}

pub fn kmeans(points: &DenseMatrix, k: usize, opts: &KmeansOptions) -> Result<ClusterAssignment> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::invalid(
            "k",
            format!("{k} clusters for {n} points (need 1 <= k <= n)"),
        ));
    }
    if opts.restarts == 0 {
        return Err(Error::invalid("restarts", "must be at least 1"));
    }

    let mut best: Option<(f64, ClusterAssignment)> = None;
    for restart in 0..opts.restarts {
        let seed = opts.seed.wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let run = lloyd(points, k, seed, opts.max_iters);
        let inertia = run.inertia.unwrap_or(f64::INFINITY);
        let better = best.as_ref().is_none_or(|(b, _)| inertia < *b);
        if better {
            best = Some((inertia, run));
        }
    }
    Ok(best.expect("at least one restart").1)
}

fn lloyd(points: &DenseMatrix, k: usize, seed: u64, max_iters: usize) -> ClusterAssignment {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = plus_plus_init(points, k, seed);
    let mut assignment = assign(points, &centroids);
    repair_empty(points, &centroids, &mut assignment, k);

    for _ in 0..max_iters {
        centroids = means(points, &assignment, k, d);
        let mut next = assign(points, &centroids);
        repair_empty(points, &centroids, &mut next, k);
        let converged = next == assignment;
        assignment = next;
        if converged {
            break;
        }
    }

    let centroids = means(points, &assignment, k, d);
    let inertia: f64 = (0..n)
        .map(|i| squared_distance(points.row(i), centroids.row(assignment[i])))
        .sum();
    ClusterAssignment {
        cluster_of: assignment,
        k,
        centroids: Some(centroids),
        inertia: Some(inertia),
    }
}

/// k-means++: first center uniform, then candidates weighted by squared
/// distance to the nearest chosen center. When every remaining point has
/// zero weight (exact duplicates of chosen centers), the lowest-index
/// unchosen point is taken.
fn plus_plus_init(points: &DenseMatrix, k: usize, seed: u64) -> DenseMatrix {
    let n = points.rows();
    let d = points.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = DenseMatrix::zeros(k, d);
    let mut chosen = vec![false; n];

    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.row_mut(0).copy_from_slice(points.row(first));

    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.row(i), points.row(first)))
        .collect();

    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut cumulative = 0.0;
            let mut pick = None;
            for (i, &w) in dist2.iter().enumerate() {
                cumulative += w;
                if cumulative > target && w > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| {
                dist2
                    .iter()
                    .rposition(|&w| w > 0.0)
                    .expect("positive total implies a positive weight")
            })
        } else {
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[pick] = true;
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for i in 0..n {
            let d2 = squared_distance(points.row(i), points.row(pick));
            if d2 < dist2[i] {
                dist2[i] = d2;
            }
        }
    }
    centroids
}

fn assign(points: &DenseMatrix, centroids: &DenseMatrix) -> Vec<usize> {
    let k = centroids.rows();
    (0..points.rows())
        .into_par_iter()
        .map(|i| {
            let p = points.row(i);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d2 = squared_distance(p, centroids.row(c));
                if d2 < best_d {
                    best_d = d2;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Give each empty cluster the point farthest from its assigned centroid,
/// scanning clusters in index order; donor clusters must keep two members.
fn repair_empty(points: &DenseMatrix, centroids: &DenseMatrix, assignment: &mut [usize], k: usize) {
    let mut counts = vec![0usize; k];
    for &c in assignment.iter() {
        counts[c] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut candidate = None;
        let mut worst = -1.0;
        for (i, &c) in assignment.iter().enumerate() {
            if counts[c] < 2 {
                continue;
            }
            let d2 = squared_distance(points.row(i), centroids.row(c));
            if d2 > worst {
                worst = d2;
                candidate = Some(i);
            }
        }
        if let Some(i) = candidate {
            counts[assignment[i]] -= 1;
            assignment[i] = empty;
            counts[empty] += 1;
        }
    }
}

fn means(points: &DenseMatrix, assignment: &[usize], k: usize, d: usize) -> DenseMatrix {
    let mut sums = DenseMatrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &c) in assignment.iter().enumerate() {
        counts[c] += 1;
        let row = points.row(i);
        let dst = sums.row_mut(c);
        for (acc, v) in dst.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            for v in sums.row_mut(c) {
                *v *= inv;
            }
        }
    }
    sums
}
