//! Seeded synthetic datasets.
//!
//! [`ManifoldMixture`] produces descriptor-like data: a mixture of clusters,
//! each a Gaussian spread over a random low-dimensional linear subspace of the
//! ambient space plus small isotropic noise. Cluster subspace dimensions and
//! weights vary, so local intrinsic dimensionality and density vary across the
//! set. An optional second group of higher-dimensional clusters holds a fixed
//! share of the mass; queries landing there are the expensive ones.
//! [`uniform_ball`] draws points uniformly from a Euclidean unit ball.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::store::VectorStore;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldMixture {
    pub dim: usize,
    pub clusters: usize,
    /// Inclusive range of per-cluster subspace dimensions.
    pub min_intrinsic: usize,
    pub max_intrinsic: usize,
    /// Clusters in the high-dimensional group; 0 disables it.
    pub hard_clusters: usize,
    pub hard_min_intrinsic: usize,
    pub hard_max_intrinsic: usize,
    /// Share of points drawn from the high-dimensional group.
    pub hard_fraction: f64,
    /// Root-mean-square distance of a cluster's points from its center,
    /// before noise.
    pub cluster_radius: f64,
    /// Standard deviation of the per-coordinate center offsets.
    pub center_spread: f64,
    pub center_mean: f64,
    /// Per-coordinate isotropic noise.
    pub noise: f64,
    /// Ratio between successive standard deviations beyond a cluster's
    /// leading directions.
    pub tail_decay: f64,
    /// Cluster weights follow `1 / (rank + 1)^weight_skew`.
    pub weight_skew: f64,
    pub seed: u64,
}

impl Default for ManifoldMixture {
    fn default() -> Self {
        Self {
            dim: 128,
            clusters: 32,
            min_intrinsic: 4,
            max_intrinsic: 18,
            hard_clusters: 6,
            hard_min_intrinsic: 20,
            hard_max_intrinsic: 32,
            hard_fraction: 0.08,
            cluster_radius: 60.0,
            center_spread: 1.0,
            center_mean: 50.0,
            noise: 0.5,
            tail_decay: 0.7,
            weight_skew: 0.5,
            seed: 7,
        }
    }
}

struct Cluster {
    center: Vec<f64>,
    /// Unit directions, each paired with its standard deviation.
    basis: Vec<(Vec<f64>, f64)>,
}

impl ManifoldMixture {
    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.clusters == 0 {
            return Err(Error::usage("mixture needs a positive dimension and cluster count"));
        }
        let mut ranges = vec![(self.min_intrinsic, self.max_intrinsic)];
        if self.hard_clusters > 0 {
            ranges.push((self.hard_min_intrinsic, self.hard_max_intrinsic));
            if !(0.0..1.0).contains(&self.hard_fraction) {
                return Err(Error::usage(format!(
                    "hard_fraction = {} must lie in [0, 1)",
                    self.hard_fraction
                )));
            }
        }
        for (lo, hi) in ranges {
            if lo == 0 || lo > hi || hi > self.dim {
                return Err(Error::usage(format!(
                    "intrinsic dimension range {lo}..={hi} must lie in 1..={}",
                    self.dim
                )));
            }
        }
        let finite = [
            self.cluster_radius,
            self.center_spread,
            self.center_mean,
            self.noise,
            self.weight_skew,
            self.tail_decay,
        ];
        if finite.iter().any(|v| !v.is_finite()) || self.noise < 0.0
            || self.cluster_radius < 0.0
            || !(0.0..1.0).contains(&self.tail_decay)
        {
            return Err(Error::usage("mixture scales must be finite and non-negative"));
        }
        Ok(())
    }

    /// Subspace dimension of each cluster, in cluster order: the main group
    /// first, then the high-dimensional group.
    pub fn intrinsic_dims(&self) -> Vec<usize> {
        let mut dims = spread(self.clusters, self.min_intrinsic, self.max_intrinsic);
        dims.extend(spread(self.hard_clusters, self.hard_min_intrinsic, self.hard_max_intrinsic));
        dims
    }

    /// Per-direction standard deviations for a cluster of the given
    /// dimension: a flat plateau of `k` directions followed by a geometric
    /// tail, scaled to `cluster_radius`.
    fn spectrum(&self, k: usize) -> Vec<f64> {
        let mut sd: Vec<f64> = (0..self.dim)
            .map(|j| if j < k { 1.0 } else { self.tail_decay.powi((j + 1 - k) as i32) })
            .take_while(|&s| s > 1e-3)
            .collect();
        let rms = sd.iter().map(|s| s * s).sum::<f64>().sqrt();
        sd.iter_mut().for_each(|s| *s *= self.cluster_radius / rms);
        sd
    }

    fn hard_fraction_used(&self) -> f64 {
        if self.hard_clusters > 0 {
            self.hard_fraction
        } else {
            0.0
        }
    }

    fn build_clusters(&self, rng: &mut ChaCha8Rng) -> Vec<Cluster> {
        let centers = Normal::new(self.center_mean, self.center_spread.max(f64::MIN_POSITIVE))
            .expect("validated");
        self.intrinsic_dims()
            .into_iter()
            .map(|k| {
                let center = (0..self.dim).map(|_| centers.sample(rng)).collect();
                let spectrum = self.spectrum(k);
                let basis = spectrum
                    .into_iter()
                    .map(|sd| {
                        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        v.iter_mut().for_each(|x| *x /= norm);
                        (v, sd)
                    })
                    .collect();
                Cluster { center, basis }
            })
            .collect()
    }

    /// Draws `n` i.i.d. points. The same configuration always yields the same
    /// points, and a longer draw extends a shorter one.
    pub fn generate(&self, n: usize) -> Result<VectorStore> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let clusters = self.build_clusters(&mut rng);
        // shuffle which dimension gets which weight so density and intrinsic
        // dimension are not tied together within a group
        let mut weights = Vec::with_capacity(clusters.len());
        for (size, mass) in [
            (self.clusters, 1.0 - self.hard_fraction_used()),
            (self.hard_clusters, self.hard_fraction_used()),
        ] {
            let mut ranks: Vec<usize> = (0..size).collect();
            for i in (1..ranks.len()).rev() {
                ranks.swap(i, rng.random_range(0..=i));
            }
            let raw: Vec<f64> = ranks
                .iter()
                .map(|&r| 1.0 / ((r + 1) as f64).powf(self.weight_skew))
                .collect();
            let sum: f64 = raw.iter().sum();
            weights.extend(raw.iter().map(|w| w / sum * mass));
        }
        let total: f64 = weights.iter().sum();
        let cumulative: Vec<f64> = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w / total;
                Some(*acc)
            })
            .collect();

        let mut data = Vec::with_capacity(n * self.dim);
        let mut point = vec![0.0f64; self.dim];
        for _ in 0..n {
            let u: f64 = rng.random();
            let c = cumulative.partition_point(|&p| p < u).min(clusters.len() - 1);
            let cl = &clusters[c];
            point.copy_from_slice(&cl.center);
            for (dir, sd) in &cl.basis {
                let coef = sd * rng.sample::<f64, _>(StandardNormal);
                point.iter_mut().zip(dir).for_each(|(p, d)| *p += coef * d);
            }
            for p in point.iter_mut() {
                *p += self.noise * rng.sample::<f64, _>(StandardNormal);
            }
            data.extend(point.iter().map(|&p| p as f32));
        }
        VectorStore::new(self.dim, data)
    }
}

/// `count` dimensions spaced evenly over `lo..=hi`.
fn spread(count: usize, lo: usize, hi: usize) -> Vec<usize> {
    let span = hi.saturating_sub(lo);
    (0..count)
        .map(|c| {
            if count == 1 {
                lo
            } else {
                lo + (c * span + (count - 1) / 2) / (count - 1)
            }
        })
        .collect()
}

/// `n` points drawn uniformly from the unit ball in `dim` dimensions.
pub fn uniform_ball(n: usize, dim: usize, seed: u64) -> Result<VectorStore> {
    if dim == 0 {
        return Err(Error::usage("dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * dim);
    let mut v = vec![0.0f64; dim];
    for _ in 0..n {
        let norm = loop {
            v.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                break norm;
            }
        };
        let radius = rng.random::<f64>().powf(1.0 / dim as f64);
        data.extend(v.iter().map(|x| (x / norm * radius) as f32));
    }
    VectorStore::new(dim, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_is_seeded_and_prefix_stable() {
        let cfg = ManifoldMixture {
            clusters: 8,
            ..Default::default()
        };
        let a = cfg.generate(500).unwrap();
        let b = cfg.generate(800).unwrap();
        assert_eq!(a.as_slice(), &b.as_slice()[..500 * 128]);
        let other = ManifoldMixture { seed: 8, ..cfg };
        assert_ne!(a.as_slice(), other.generate(500).unwrap().as_slice());
    }

    #[test]
    fn intrinsic_dims_cover_range() {
        let cfg = ManifoldMixture::default();
        let dims = cfg.intrinsic_dims();
        assert_eq!(dims.len(), cfg.clusters + cfg.hard_clusters);
        let (main, hard) = dims.split_at(cfg.clusters);
        assert_eq!((main[0], *main.last().unwrap()), (cfg.min_intrinsic, cfg.max_intrinsic));
        assert_eq!((hard[0], *hard.last().unwrap()), (cfg.hard_min_intrinsic, cfg.hard_max_intrinsic));
        assert!(main.windows(2).all(|w| w[0] <= w[1]));
        assert!(hard.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn noiseless_single_cluster_is_flat() {
        // every point lies in center + span(basis): rank of centered data is small
        let cfg = ManifoldMixture {
            dim: 10,
            clusters: 1,
            min_intrinsic: 2,
            max_intrinsic: 2,
            hard_clusters: 0,
            noise: 0.0,
            tail_decay: 0.0,
            ..Default::default()
        };
        let s = cfg.generate(50).unwrap();
        let p0: Vec<f64> = s.row(0).iter().map(|&x| x as f64).collect();
        let diffs: Vec<Vec<f64>> = (1..4)
            .map(|i| s.row(i).iter().zip(&p0).map(|(&x, c)| x as f64 - c).collect())
            .collect();
        // three difference vectors in a 2-d space: Gram determinant vanishes
        let g = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let m: Vec<Vec<f64>> = diffs.iter().map(|a| diffs.iter().map(|b| g(a, b)).collect()).collect();
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        let scale = m[0][0] * m[1][1] * m[2][2];
        assert!(det.abs() < 1e-3 * scale, "det {det} scale {scale}");
    }

    #[test]
    fn ball_points_inside_and_spread() {
        let s = uniform_ball(2000, 8, 1).unwrap();
        let norms: Vec<f64> = s
            .rows()
            .map(|r| r.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt())
            .collect();
        assert!(norms.iter().all(|&r| r <= 1.0 + 1e-6));
        // P(r <= 0.5^(1/8)) = 0.5
        let below = norms.iter().filter(|&&r| r <= 0.5f64.powf(1.0 / 8.0)).count();
        assert!((below as f64 / 2000.0 - 0.5).abs() < 0.05);
    }

    #[test]
    fn rejects_bad_config() {
        let bad = ManifoldMixture {
            max_intrinsic: 200,
            ..Default::default()
        };
        assert!(bad.generate(10).is_err());
        let bad = ManifoldMixture {
            hard_fraction: 1.0,
            ..Default::default()
        };
        assert!(bad.generate(10).is_err());
        // the hard group's range is only checked when the group exists
        let fine = ManifoldMixture {
            dim: 16,
            max_intrinsic: 8,
            hard_clusters: 0,
            ..Default::default()
        };
        assert_eq!(fine.generate(10).unwrap().len(), 10);
    }
}
