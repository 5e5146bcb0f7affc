use rand::Rng;

use crate::rng::rng_from_seed;
use crate::scalar::Scalar;

use super::codebook::{sq_dist, Codebook};
use super::CodecError;

/// Output of [`kmeans_fit`].
#[derive(Debug, Clone)]
pub struct KMeansFit<T> {
    pub codebook: Codebook<T>,
    pub assignments: Vec<usize>,
    /// Mean squared quantization error after each assignment step.
    pub objective_trace: Vec<T>,
}

/// Lloyd's algorithm from k-means++ seeding.
///
/// `points` holds `n * dim` row-major values. A cluster that empties out is
/// re-seeded with the point currently farthest from its centroid.
pub fn kmeans_fit<T: Scalar>(points: &[T], dim: usize, k: usize, seed: u64, max_iters: usize) -> Result<KMeansFit<T>, CodecError> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(CodecError::DimensionMismatch(format!("{} values are not a multiple of dim {dim}", points.len())));
    }
    let n = points.len() / dim;
    let distinct = count_distinct(points, dim);
    if distinct < k || k < 2 {
        return Err(CodecError::InsufficientData { needed: k.max(2), found: distinct });
    }
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut rng = rng_from_seed(seed);

    // k-means++ seeding
    let mut centroids: Vec<T> = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first)).as_f64()).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    if target < w {
                        chosen = Some(i);
                        break;
                    }
                    target -= w;
                }
            }
            // Rounding can leave `target` just past the last positive weight.
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            unreachable!("fewer distinct points than clusters")
        };
        let c = row(pick).to_vec();
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(sq_dist(row(i), &c).as_f64());
        }
        centroids.extend_from_slice(&c);
    }

    let mut assignments = vec![usize::MAX; n];
    let mut dists = vec![T::zero(); n];
    let mut trace = Vec::new();
    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        for i in 0..n {
            let (best, d) = nearest(&centroids, dim, row(i));
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
            dists[i] = d;
        }
        trace.push(dists.iter().copied().sum::<T>() / T::lit(n as f64));
        if !changed && trace.len() > 1 {
            break;
        }

        let mut sums = vec![T::zero(); k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignments[i];
            counts[c] += 1;
            for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *s = *s + *v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = T::one() / T::lit(counts[c] as f64);
                for j in 0..dim {
                    centroids[c * dim + j] = sums[c * dim + j] * inv;
                }
            }
        }
        for c in (0..k).filter(|&c| counts[c] == 0) {
            let far = (0..n)
                .max_by(|&a, &b| dists[a].partial_cmp(&dists[b]).unwrap_or(std::cmp::Ordering::Equal).then(b.cmp(&a)))
                .expect("non-empty");
            centroids[c * dim..(c + 1) * dim].copy_from_slice(row(far));
            dists[far] = T::zero();
        }
    }
    // Final assignment against the last centroid update.
    for i in 0..n {
        assignments[i] = nearest(&centroids, dim, row(i)).0;
    }
    let final_obj = (0..n).map(|i| nearest(&centroids, dim, row(i)).1).sum::<T>() / T::lit(n as f64);
    if trace.last().is_none_or(|&last| final_obj < last) {
        trace.push(final_obj);
    }
    Ok(KMeansFit { codebook: Codebook::new(k, dim, centroids)?, assignments, objective_trace: trace })
}

/// Trains a `k`-entry codebook on `points` (see [`kmeans_fit`]).
pub fn kmeans_codebook<T: Scalar>(points: &[T], dim: usize, k: usize, seed: u64, iters: usize) -> Result<Codebook<T>, CodecError> {
    Ok(kmeans_fit(points, dim, k, seed, iters)?.codebook)
}

/// Mean squared distance from each point to its nearest codeword.
pub fn quantization_mse<T: Scalar>(points: &[T], cb: &Codebook<T>) -> T {
    let n = points.len() / cb.dim();
    points.chunks_exact(cb.dim()).map(|p| cb.nearest(p).1).sum::<T>() / T::lit(n as f64)
}

fn nearest<T: Scalar>(centroids: &[T], dim: usize, p: &[T]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (c, e) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(p, e);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn count_distinct<T: Scalar>(points: &[T], dim: usize) -> usize {
    let mut keys: Vec<Vec<u64>> = points.chunks_exact(dim).map(|p| p.iter().map(|v| (v.as_f64() + 0.0).to_bits()).collect()).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_points_two_clusters() {
        let fit = kmeans_fit(&[0.0f64, 0.1, 0.9, 1.0], 1, 2, 3, 50).unwrap();
        let mut c = fit.codebook.codewords().to_vec();
        c.sort_by(f64::total_cmp);
        assert!((c[0] - 0.05).abs() < 1e-12 && (c[1] - 0.95).abs() < 1e-12, "{c:?}");
    }

    #[test]
    fn k_equal_to_distinct_points_is_lossless() {
        let pts = [0.0f64, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let cb = kmeans_codebook(&pts, 2, 4, 1, 20).unwrap();
        assert_eq!(quantization_mse(&pts, &cb), 0.0);
    }

    #[test]
    fn too_few_distinct_points() {
        let err = kmeans_codebook(&[0.5f64, 0.5, 0.5], 1, 2, 0, 10).unwrap_err();
        assert!(matches!(err, CodecError::InsufficientData { needed: 2, found: 1 }));
    }

    #[test]
    fn deterministic_given_seed() {
        let pts: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        let a = kmeans_codebook(&pts, 2, 8, 5, 30).unwrap();
        let b = kmeans_codebook(&pts, 2, 8, 5, 30).unwrap();
        assert_eq!(a, b);
    }
}
