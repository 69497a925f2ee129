//! Lloyd's k-means with seeded random-point initialization.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distance::{l2_sq, Scalar};
use crate::error::{Error, Result};
use crate::store::VectorStore;

/// Trained centroids, row-major in `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub dim: usize,
    pub k: usize,
    pub centroids: Vec<f64>,
    /// Mean squared distance of each training point to its assigned centroid.
    pub distortion: f64,
    /// Distortion measured after each assignment step.
    pub history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansModel {
    #[inline]
    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    /// Nearest centroid; lower index wins ties.
    pub fn assign<T: Scalar>(&self, v: &[T]) -> (usize, f64) {
        nearest(&self.centroids, self.dim, v)
    }
}

#[inline]
pub(crate) fn nearest<T: Scalar>(centroids: &[f64], dim: usize, v: &[T]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (c, cent) in centroids.chunks_exact(dim).enumerate() {
        let d = l2_sq(v, cent);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iters: usize,
    pub seed: u64,
}

pub fn kmeans_train(data: &VectorStore, k: usize, max_iters: usize, seed: u64) -> Result<KMeansModel> {
    kmeans_train_slice(data.as_slice(), data.dim(), KMeansParams { k, max_iters, seed })
}

/// k-means over row-major `data` of dimension `dim`.
pub fn kmeans_train_slice<T: Scalar>(data: &[T], dim: usize, params: KMeansParams) -> Result<KMeansModel> {
    let KMeansParams { k, max_iters, seed } = params;
    if dim == 0 || data.len() % dim != 0 {
        return Err(Error::usage("k-means data is not a whole number of rows"));
    }
    let n = data.len() / dim;
    if k == 0 || k > n {
        return Err(Error::usage(format!("k-means k = {k} must be in 1..={n}")));
    }
    if max_iters == 0 {
        return Err(Error::usage("k-means needs at least one iteration"));
    }
    let row = |i: usize| &data[i * dim..(i + 1) * dim];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init: Vec<usize> = sample(&mut rng, n, k).into_vec();
    init.sort_unstable();
    let mut centroids: Vec<f64> = init
        .iter()
        .flat_map(|&i| row(i).iter().map(|x| x.to_f64()))
        .collect();

    let mut assignment = vec![usize::MAX; n];
    let mut dist = vec![0.0f64; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let mut changed = false;
        for i in 0..n {
            let (c, d) = nearest(&centroids, dim, row(i));
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
            dist[i] = d;
        }
        history.push(dist.iter().sum::<f64>() / n as f64);
        iterations += 1;
        if !changed || iterations >= max_iters {
            break;
        }

        // update step
        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i];
            counts[c] += 1;
            for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *s += x.to_f64();
            }
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centroids[c * dim..(c + 1) * dim]
                    .iter_mut()
                    .zip(&sums[c * dim..(c + 1) * dim])
                {
                    *dst = s * inv;
                }
                continue;
            }
            // empty cluster: reseed with the farthest point not already used
            let far = (0..n)
                .filter(|&i| !taken[i])
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                .expect("k <= n");
            taken[far] = true;
            dist[far] = 0.0;
            for (dst, x) in centroids[c * dim..(c + 1) * dim].iter_mut().zip(row(far)) {
                *dst = x.to_f64();
            }
        }
    }
    log::debug!(
        "k-means k={k} n={n}: {iterations} iterations, distortion {:.6e}",
        history.last().copied().unwrap_or(0.0)
    );
    Ok(KMeansModel {
        dim,
        k,
        centroids,
        distortion: *history.last().expect("at least one iteration"),
        history,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn k_equals_n_is_exact() {
        let s = VectorStore::from_rows(&[[0.0f32, 1.0], [5.0, 5.0], [-3.0, 2.0]]).unwrap();
        let m = kmeans_train(&s, 3, 10, 1).unwrap();
        assert_eq!(m.distortion, 0.0);
        let mut cents: Vec<Vec<f64>> = (0..3).map(|c| m.centroid(c).to_vec()).collect();
        cents.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(cents, vec![vec![-3.0, 2.0], vec![0.0, 1.0], vec![5.0, 5.0]]);
    }

    #[test]
    fn symmetric_two_cluster_optimum() {
        let mut rows = vec![[-1.0f32]; 50];
        rows.extend(vec![[1.0f32]; 50]);
        let s = VectorStore::from_rows(&rows).unwrap();
        for seed in 0..10 {
            let m = kmeans_train(&s, 2, 50, seed).unwrap();
            let mut c = [m.centroid(0)[0], m.centroid(1)[0]];
            c.sort_by(f64::total_cmp);
            assert_eq!(c, [-1.0, 1.0], "seed {seed}");
            // exhaustive check: no other split of the two value groups does better
            assert_eq!(m.distortion, 0.0);
        }
    }

    #[test]
    fn deterministic_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f32> = (0..2000 * 6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = VectorStore::new(6, data).unwrap();
        let a = kmeans_train(&s, 16, 30, 9).unwrap();
        let b = kmeans_train(&s, 16, 30, 9).unwrap();
        assert_eq!(a, b);
        for w in a.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", a.history);
        }
    }

    #[test]
    fn empty_clusters_are_reseeded() {
        // many duplicates force empty clusters after the first update
        let mut rows = vec![[0.0f32, 0.0]; 30];
        rows.push([10.0, 10.0]);
        rows.push([20.0, 0.0]);
        rows.push([0.0, 20.0]);
        let s = VectorStore::from_rows(&rows).unwrap();
        let m = kmeans_train(&s, 4, 20, 0).unwrap();
        assert_eq!(m.distortion, 0.0);
    }

    #[test]
    fn rejects_bad_k() {
        let s = VectorStore::from_rows(&[[0.0f32]]).unwrap();
        assert!(kmeans_train(&s, 2, 5, 0).is_err());
        assert!(kmeans_train(&s, 1, 0, 0).is_err());
    }
}
