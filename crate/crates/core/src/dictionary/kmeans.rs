//! Seeded k-means with k-means++ initialization.

use super::DictionaryError;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    /// Sum of squared distances to assigned centroids at the final
    /// assignment.
    pub objective: f64,
    pub iterations: usize,
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Deterministic for a fixed seed. Ties in assignment go to the lowest
/// cluster index. A cluster left empty after an update step is re-seeded at
/// the point farthest from its assigned centroid, which cannot increase the
/// objective. Stops when the largest centroid shift drops below `tol` or
/// after `max_iter` iterations.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansResult, DictionaryError> {
    if points.is_empty() {
        return Err(DictionaryError::EmptyInput);
    }
    if k == 0 {
        return Err(DictionaryError::ZeroK);
    }
    if k > points.len() {
        return Err(DictionaryError::KExceedsPoints { k, n: points.len() });
    }
    let dim = points[0].len();
    for (index, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(DictionaryError::DimMismatch {
                index,
                expected: dim,
                found: p.len(),
            });
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut centroids = init_plus_plus(points, k, &mut rng);
    let mut assignments = vec![0usize; points.len()];
    let mut iterations = 0usize;

    for iter in 0..max_iter.max(1) {
        iterations = iter + 1;

        // Assignment step.
        for (i, p) in points.iter().enumerate() {
            let mut best = f64::INFINITY;
            let mut best_k = 0usize;
            for (c_idx, c) in centroids.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best {
                    best = d;
                    best_k = c_idx;
                }
            }
            assignments[i] = best_k;
        }

        // Update step.
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            let a = assignments[i];
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut max_shift = 0.0f64;
        for c_idx in 0..k {
            if counts[c_idx] == 0 {
                continue;
            }
            let n = counts[c_idx] as f64;
            let new: Vec<f64> = sums[c_idx].iter().map(|s| s / n).collect();
            max_shift = max_shift.max(sq_dist(&centroids[c_idx], &new).sqrt());
            centroids[c_idx] = new;
        }

        // Re-seed empty clusters at the point currently farthest from its
        // own centroid; each grabbed point is excluded from later grabs.
        let empties: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
        if !empties.is_empty() {
            let mut taken = vec![false; points.len()];
            for c_idx in empties {
                let mut far_i = usize::MAX;
                let mut far_d = -1.0;
                for (i, p) in points.iter().enumerate() {
                    if taken[i] {
                        continue;
                    }
                    let d = sq_dist(p, &centroids[assignments[i]]);
                    if d > far_d {
                        far_d = d;
                        far_i = i;
                    }
                }
                if far_i != usize::MAX {
                    centroids[c_idx] = points[far_i].clone();
                    taken[far_i] = true;
                    max_shift = f64::INFINITY; // force another iteration
                }
            }
        }

        if max_shift < tol {
            break;
        }
    }

    // Final assignment so the reported objective matches the returned
    // centroids.
    let mut objective = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut best = f64::INFINITY;
        let mut best_k = 0usize;
        for (c_idx, c) in centroids.iter().enumerate() {
            let d = sq_dist(p, c);
            if d < best {
                best = d;
                best_k = c_idx;
            }
        }
        assignments[i] = best_k;
        objective += best;
    }

    Ok(KMeansResult {
        centroids,
        assignments,
        objective,
        iterations,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first center uniform, then points sampled with
/// probability proportional to the squared distance to the nearest chosen
/// center. When every remaining point coincides with a chosen center the
/// next unchosen point (lowest index) is taken, so centers stay distinct
/// whenever the input has enough distinct positions.
fn init_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha12Rng) -> Vec<Vec<f64>> {
    let mut chosen_idx = vec![rng.random_range(0..points.len())];
    let mut weights: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p, &points[chosen_idx[0]]))
        .collect();

    while chosen_idx.len() < k {
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = weights.len() - 1;
            for (i, &w) in weights.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // All points coincide with some chosen center; take the first
            // index not already chosen.
            (0..points.len())
                .find(|i| !chosen_idx.contains(i))
                .expect("k <= points.len() guarantees an unchosen index")
        };
        chosen_idx.push(next);
        for (w, p) in weights.iter_mut().zip(points) {
            let d = sq_dist(p, &points[next]);
            if d < *w {
                *w = d;
            }
        }
    }
    chosen_idx.iter().map(|&i| points[i].clone()).collect()
}
