//! Lloyd's k-means with random-point initialization.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::instance::TaskFeatureMatrix;

const MAX_ITERATIONS: usize = 100;
const MOVEMENT_TOLERANCE: f64 = 1e-10;

/// Clusters the columns of `x` into `k` groups.
///
/// Centroids start at `k` distinct data points drawn from the seed, then
/// Lloyd iterations run until centroids move less than 1e-10 or 100
/// iterations pass. A cluster that empties is reseeded to the point
/// currently farthest from its assigned centroid. Every task ends up
/// assigned to its nearest final centroid.
pub fn kmeans(x: &TaskFeatureMatrix, k: usize, seed: u64) -> Vec<usize> {
    let n = x.len();
    assert!(k >= 1 && k <= n, "need 1 <= k <= n, got k={} n={}", k, n);
    let p = x.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let starters = rand::seq::index::sample(&mut rng, n, k);
    let mut centroids: Vec<Vec<f64>> = starters.iter().map(|i| x.column(i)).collect();
    let mut assignment = vec![0usize; n];

    for _ in 0..MAX_ITERATIONS {
        assign_all(x, &centroids, &mut assignment);
        fix_empty_clusters(x, &mut centroids, &mut assignment, k);

        let mut movement = 0.0f64;
        for c in 0..k {
            let mut mean = vec![0.0; p];
            let mut count = 0usize;
            for (i, &a) in assignment.iter().enumerate() {
                if a == c {
                    for (m, v) in mean.iter_mut().zip(x.column(i)) {
                        *m += v;
                    }
                    count += 1;
                }
            }
            for m in &mut mean {
                *m /= count as f64;
            }
            movement = movement.max(sq_dist(&mean, &centroids[c]).sqrt());
            centroids[c] = mean;
        }
        if movement < MOVEMENT_TOLERANCE {
            break;
        }
    }

    assign_all(x, &centroids, &mut assignment);
    fix_empty_clusters(x, &mut centroids, &mut assignment, k);
    assignment
}

/// Sum of squared distances from each point to its cluster centroid.
pub fn inertia(x: &TaskFeatureMatrix, assignment: &[usize], k: usize) -> f64 {
    let p = x.dim();
    let mut sums = vec![vec![0.0; p]; k];
    let mut counts = vec![0usize; k];
    for (i, &a) in assignment.iter().enumerate() {
        for (s, v) in sums[a].iter_mut().zip(x.column(i)) {
            *s += v;
        }
        counts[a] += 1;
    }
    let centroids: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| s.into_iter().map(|v| v / (c.max(1) as f64)).collect())
        .collect();
    assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_dist(&x.column(i), &centroids[a]))
        .sum()
}

fn assign_all(x: &TaskFeatureMatrix, centroids: &[Vec<f64>], assignment: &mut [usize]) {
    for i in 0..x.len() {
        let col = x.column(i);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let d = sq_dist(&col, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignment[i] = best;
    }
}

fn fix_empty_clusters(
    x: &TaskFeatureMatrix,
    centroids: &mut [Vec<f64>],
    assignment: &mut [usize],
    k: usize,
) {
    loop {
        let mut counts = vec![0usize; k];
        for &a in assignment.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        // Reseed at the point farthest from its own centroid, but never
        // steal the last member of another cluster.
        let victim = (0..x.len())
            .filter(|&i| counts[assignment[i]] > 1)
            .max_by(|&a, &b| {
                let da = sq_dist(&x.column(a), &centroids[assignment[a]]);
                let db = sq_dist(&x.column(b), &centroids[assignment[b]]);
                da.total_cmp(&db).then(a.cmp(&b))
            });
        let Some(victim) = victim else { return };
        centroids[empty] = x.column(victim);
        assignment[victim] = empty;
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
