//! Lloyd's k-means with k-means++ seeding and restarts.
//!
//! Points are the rows of the input matrix. Everything is deterministic
//! given the RNG: restarts draw from per-index substreams and ties between
//! restarts are broken by the lowest restart index, so the selected run does
//! not depend on evaluation order.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Restart count used by callers that do not have a reason to pick another.
pub const DEFAULT_RESTARTS: usize = 10;

const MAX_ITERS: usize = 300;

/// Clusters the rows of `points` into `k` groups, returning one label in
/// `[0, k)` per row. Runs `restarts` independent k-means++ initializations
/// and keeps the lowest-inertia result.
pub fn kmeans(points: &Matrix, k: usize, rng: &mut Rng, restarts: usize) -> Result<Vec<usize>> {
    let n = points.rows();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds number of points {n}"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }

    let mut best: Option<KmeansRun> = None;
    for r in 0..restarts {
        let mut stream = rng.substream_index("kmeans-restart", r as u64);
        let run = kmeans_single(points, k, &mut stream);
        let better = match &best {
            None => true,
            Some(b) => run.inertia < b.inertia,
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1").labels)
}

pub(crate) struct KmeansRun {
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia measured after each assignment step; non-increasing.
    #[cfg_attr(not(test), allow(dead_code))]
    pub inertia_history: Vec<f64>,
}

pub(crate) fn kmeans_single(points: &Matrix, k: usize, rng: &mut Rng) -> KmeansRun {
    let n = points.rows();
    let dim = points.cols();

    let seeds = plus_plus_seeds(points, k, rng);
    let mut centroids = Matrix::zeros(k, dim);
    for (c, &idx) in seeds.iter().enumerate() {
        centroids.row_mut(c).copy_from_slice(points.row(idx));
    }

    let mut labels = vec![0usize; n];
    let mut inertia_history = Vec::new();
    let mut inertia = f64::INFINITY;

    for _ in 0..MAX_ITERS {
        // Assignment step (nearest centroid, lowest index on ties).
        let mut changed = false;
        let mut total = 0.0;
        for i in 0..n {
            let (c, d) = nearest(points.row(i), &centroids);
            total += d;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        inertia = total;
        inertia_history.push(total);
        if !changed && inertia_history.len() > 1 {
            break;
        }

        // Update step.
        let mut sums = Matrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            let row = points.row(i);
            let acc = sums.row_mut(labels[i]);
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let mut empty: Vec<usize> = Vec::new();
        for c in 0..k {
            if counts[c] == 0 {
                empty.push(c);
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            let sum_row: Vec<f64> = sums.row(c).iter().map(|v| v * inv).collect();
            centroids.row_mut(c).copy_from_slice(&sum_row);
        }

        // Reseed each empty cluster at the point farthest from its centroid.
        if !empty.is_empty() {
            let mut taken = vec![false; n];
            for c in empty {
                let mut far_idx = 0;
                let mut far_d = -1.0;
                for i in 0..n {
                    if taken[i] {
                        continue;
                    }
                    let d = sq_dist(points.row(i), centroids.row(labels[i]));
                    if d > far_d {
                        far_d = d;
                        far_idx = i;
                    }
                }
                taken[far_idx] = true;
                let row: Vec<f64> = points.row(far_idx).to_vec();
                centroids.row_mut(c).copy_from_slice(&row);
            }
        }
    }

    KmeansRun {
        labels,
        inertia,
        inertia_history,
    }
}

/// k-means++ seeding: first seed uniform, later seeds sampled with
/// probability proportional to squared distance from the nearest seed.
fn plus_plus_seeds(points: &Matrix, k: usize, rng: &mut Rng) -> Vec<usize> {
    let n = points.rows();
    let mut seeds = Vec::with_capacity(k);
    seeds.push(rng.index(n));

    let mut dist = vec![0.0f64; n];
    for i in 0..n {
        dist[i] = sq_dist(points.row(i), points.row(seeds[0]));
    }

    while seeds.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.next_f64() * total;
            let mut chosen = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All remaining mass is zero (duplicate points); take the first
            // index not already chosen.
            (0..n).find(|i| !seeds.contains(i)).unwrap_or(0)
        };
        seeds.push(next);
        for i in 0..n {
            let d = sq_dist(points.row(i), points.row(next));
            if d < dist[i] {
                dist[i] = d;
            }
        }
    }
    seeds
}

fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best_c = 0;
    let mut best_d = f64::INFINITY;
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best_d {
            best_d = d;
            best_c = c;
        }
    }
    (best_c, best_d)
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum()
}
