//! Product quantization: per-subspace codebooks whose Cartesian product
//! encodes a vector in `m` bytes, plus asymmetric distance tables.

use crate::distance::{l2_sq, Scalar};
use crate::error::{Error, Result};
use crate::kmeans::{kmeans_train_slice, KMeansParams};

#[derive(Debug, Clone, PartialEq)]
pub struct PqCodebook {
    pub dim: usize,
    pub m: usize,
    pub ksub: usize,
    pub dsub: usize,
    /// `m * ksub * dsub` values; subspace `j`, centroid `c` starts at `(j * ksub + c) * dsub`.
    pub centroids: Vec<f64>,
}

impl PqCodebook {
    /// Builds a codebook from explicit tables, one `ksub * dsub` table per subspace.
    pub fn from_tables(dim: usize, m: usize, ksub: usize, centroids: Vec<f64>) -> Result<Self> {
        validate_shape(dim, m, ksub)?;
        let dsub = dim / m;
        if centroids.len() != m * ksub * dsub {
            return Err(Error::usage("codebook table size does not match (m, ksub, dsub)"));
        }
        Ok(Self {
            dim,
            m,
            ksub,
            dsub,
            centroids,
        })
    }

    #[inline]
    pub fn centroid(&self, sub: usize, c: usize) -> &[f64] {
        let start = (sub * self.ksub + c) * self.dsub;
        &self.centroids[start..start + self.dsub]
    }

    /// Nearest centroid per subspace, lower index on ties.
    pub fn encode<T: Scalar>(&self, v: &[T]) -> Vec<u8> {
        let mut code = vec![0u8; self.m];
        self.encode_into(v, &mut code);
        code
    }

    pub fn encode_into<T: Scalar>(&self, v: &[T], code: &mut [u8]) {
        debug_assert_eq!(v.len(), self.dim);
        for (j, slot) in code.iter_mut().enumerate() {
            let sub = &v[j * self.dsub..(j + 1) * self.dsub];
            let mut best = (0usize, f64::INFINITY);
            for c in 0..self.ksub {
                let d = l2_sq(sub, self.centroid(j, c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            *slot = best.0 as u8;
        }
    }

    pub fn decode(&self, code: &[u8]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim);
        for (j, &c) in code.iter().enumerate() {
            out.extend_from_slice(self.centroid(j, c as usize));
        }
        out
    }

    /// Squared partial distances from `query` to every subspace centroid.
    pub fn adc_table<T: Scalar>(&self, query: &[T]) -> AdcTable {
        let mut table = Vec::with_capacity(self.m * self.ksub);
        for j in 0..self.m {
            let sub = &query[j * self.dsub..(j + 1) * self.dsub];
            for c in 0..self.ksub {
                table.push(l2_sq(sub, self.centroid(j, c)));
            }
        }
        AdcTable {
            m: self.m,
            ksub: self.ksub,
            table,
        }
    }
}

/// Lookup table for one query: `m x ksub` squared partial distances.
#[derive(Debug, Clone)]
pub struct AdcTable {
    m: usize,
    ksub: usize,
    table: Vec<f64>,
}

impl AdcTable {
    /// Squared ADC distance to an encoded vector.
    #[inline]
    pub fn distance_sq(&self, code: &[u8]) -> f64 {
        debug_assert_eq!(code.len(), self.m);
        code.iter()
            .enumerate()
            .map(|(j, &c)| self.table[j * self.ksub + c as usize])
            .sum()
    }
}

fn validate_shape(dim: usize, m: usize, ksub: usize) -> Result<()> {
    if m == 0 || dim % m != 0 {
        return Err(Error::usage(format!(
            "PQ subspace count {m} must divide dimension {dim}"
        )));
    }
    if ksub == 0 || ksub > 256 {
        return Err(Error::usage(format!("ksub = {ksub} must be in 1..=256")));
    }
    Ok(())
}

/// Trains one k-means codebook per subspace. `data` is row-major with `dim` columns.
pub fn pq_train<T: Scalar>(
    data: &[T],
    dim: usize,
    m: usize,
    ksub: usize,
    max_iters: usize,
    seed: u64,
) -> Result<PqCodebook> {
    validate_shape(dim, m, ksub)?;
    let n = data.len() / dim;
    if ksub > n {
        return Err(Error::usage(format!(
            "ksub = {ksub} exceeds the {n} training vectors"
        )));
    }
    let dsub = dim / m;
    let mut centroids = Vec::with_capacity(m * ksub * dsub);
    for j in 0..m {
        let sub: Vec<f64> = data
            .chunks_exact(dim)
            .flat_map(|r| r[j * dsub..(j + 1) * dsub].iter().map(|x| x.to_f64()))
            .collect();
        let model = kmeans_train_slice(
            &sub,
            dsub,
            KMeansParams {
                k: ksub,
                max_iters,
                seed: seed.wrapping_add(j as u64),
            },
        )?;
        centroids.extend_from_slice(&model.centroids);
    }
    PqCodebook::from_tables(dim, m, ksub, centroids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hand_book() -> PqCodebook {
        // subspace 0: (0,0), (4,4); subspace 1: (1,-1), (-2,3)
        PqCodebook::from_tables(
            4,
            2,
            2,
            vec![0.0, 0.0, 4.0, 4.0, 1.0, -1.0, -2.0, 3.0],
        )
        .unwrap()
    }

    #[test]
    fn encode_matches_enumeration() {
        let book = hand_book();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
            // enumerate all 4 codes and keep the one whose decode is closest
            let mut best = (vec![0u8, 0], f64::INFINITY);
            for a in 0..2u8 {
                for b in 0..2u8 {
                    let d = l2_sq(&v, &book.decode(&[a, b]));
                    if d < best.1 {
                        best = (vec![a, b], d);
                    }
                }
            }
            assert_eq!(book.encode(&v), best.0);
        }
    }

    #[test]
    fn fixed_point_and_ties() {
        let book = hand_book();
        let v = book.decode(&[1, 0]);
        assert_eq!(book.encode(&v), vec![1, 0]);
        assert_eq!(book.decode(&book.encode(&v)), v);
        // (2,2) is equidistant from both subspace-0 centroids
        assert_eq!(book.encode(&[2.0, 2.0, 1.0, -1.0])[0], 0);
    }

    #[test]
    fn shape_errors() {
        assert!(pq_train(&[0.0f64; 30], 3, 2, 2, 5, 0).is_err());
        assert!(pq_train(&[0.0f64; 8], 4, 2, 4, 5, 0).is_err());
        assert!(PqCodebook::from_tables(4, 2, 300, vec![]).is_err());
    }

    #[test]
    fn adc_equals_decoded_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<f32> = (0..500 * 8).map(|_| rng.random_range(-3.0..3.0)).collect();
        let book = pq_train(&data, 8, 4, 16, 10, 3).unwrap();
        for _ in 0..50 {
            let q: Vec<f32> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
            let table = book.adc_table(&q);
            let row = rng.random_range(0..500);
            let code = book.encode(&data[row * 8..(row + 1) * 8]);
            let direct = l2_sq(&q, &book.decode(&code));
            let adc = table.distance_sq(&code);
            assert!((adc - direct).abs() <= 1e-6 * direct.max(1e-12));
            let dec = book.decode(&code);
            assert_eq!(book.decode(&book.encode(&dec)), dec);
        }
    }
}
