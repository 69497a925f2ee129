//! Maximum-likelihood estimation of local intrinsic dimensionality (LID)
//! from a point's nearest-neighbor distance profile.
//!
//! For ascending distances `x_1 <= ... <= x_k` bounded by a reference
//! radius `w`:
//!
//! ```text
//! LID = ( (1/k) * sum_i ln(w / x_i) )^-1
//! ```
//!
//! `batch_lid` takes `w` as the k-th neighbor distance, so the last term is
//! always zero.

use crate::error::{Error, Result};
use crate::knn::brute_force_knn;
use crate::store::VectorStore;

/// Ascending neighbor distances with their reference radius.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    distances: Vec<f64>,
    w: f64,
}

impl DistanceProfile {
    pub fn new(distances: Vec<f64>, w: f64) -> Result<Self> {
        if distances.len() < 2 {
            return Err(Error::usage(format!(
                "distance profile needs at least 2 entries, got {}",
                distances.len()
            )));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::usage(format!("reference radius must be positive, got {w}")));
        }
        if distances
            .iter()
            .any(|&x| !x.is_finite() || x < 0.0 || x > w)
        {
            return Err(Error::usage("distances must lie in [0, w]"));
        }
        if distances.windows(2).any(|p| p[0] > p[1]) {
            return Err(Error::usage("distances must be ascending"));
        }
        Ok(Self { distances, w })
    }

    /// Profile whose radius is its own largest distance.
    pub fn from_sorted(distances: Vec<f64>) -> Result<Self> {
        let w = distances.last().copied().unwrap_or(0.0);
        Self::new(distances, w)
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn w(&self) -> f64 {
        self.w
    }
}

/// Evaluates the MLE estimate over the whole profile.
pub fn mle_lid(profile: &DistanceProfile) -> Result<f64> {
    let k = profile.distances.len();
    if profile.distances[0] == 0.0 {
        return Err(Error::DegenerateDistances(
            "zero distance in profile".into(),
        ));
    }
    let sum: f64 = profile
        .distances
        .iter()
        .map(|&x| if x == profile.w { 0.0 } else { (profile.w / x).ln() })
        .sum();
    if sum <= 0.0 {
        return Err(Error::DegenerateDistances(
            "all distances equal the reference radius".into(),
        ));
    }
    let lid = k as f64 / sum;
    if !lid.is_finite() {
        return Err(Error::DegenerateDistances("non-finite estimate".into()));
    }
    Ok(lid)
}

/// Estimates LID from the raw (ascending) neighbor distances of one point:
/// `w` is the last distance and exact-duplicate zeros are dropped first.
pub fn lid_from_neighbor_distances(sorted: &[f64]) -> Result<f64> {
    let nonzero: Vec<f64> = sorted.iter().copied().skip_while(|&d| d == 0.0).collect();
    if nonzero.len() < 2 {
        return Err(Error::DegenerateDistances(format!(
            "only {} nonzero neighbor distances",
            nonzero.len()
        )));
    }
    mle_lid(&DistanceProfile::from_sorted(nonzero)?)
}

/// Per-subject estimates from [`batch_lid`]; `None` marks a degenerate profile.
#[derive(Debug, Clone, PartialEq)]
pub struct LidBatch {
    pub values: Vec<Option<f64>>,
    pub failures: usize,
}

/// LID of every row of `subject` against its `k` nearest rows of `base`.
pub fn batch_lid(subject: &VectorStore, base: &VectorStore, k: usize) -> Result<LidBatch> {
    if k < 2 {
        return Err(Error::usage("batch LID needs k >= 2"));
    }
    let mut values = Vec::with_capacity(subject.len());
    let mut failures = 0;
    for q in subject.rows() {
        let nn = brute_force_knn(base, q, k)?;
        let dists: Vec<f64> = nn.iter().map(|n| n.dist).collect();
        match lid_from_neighbor_distances(&dists) {
            Ok(v) => values.push(Some(v)),
            Err(Error::DegenerateDistances(_)) => {
                failures += 1;
                values.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    if failures > 0 {
        log::warn!("batch LID: {failures} of {} subjects degenerate", subject.len());
    }
    Ok(LidBatch { values, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lid(d: &[f64], w: f64) -> Result<f64> {
        mle_lid(&DistanceProfile::new(d.to_vec(), w)?)
    }

    #[test]
    fn hand_values() {
        // (1/3)(ln 4 + ln 2 + 0) = ln 2
        let v = lid(&[1.0, 2.0, 4.0], 4.0).unwrap();
        assert!((v - 1.0 / std::f64::consts::LN_2).abs() < 1e-12);
        assert!((v - 1.4427).abs() < 1e-4);
        for w in [1.0, 3.7, 1e-3, 250.0] {
            let v = lid(&[w / std::f64::consts::E, w], w).unwrap();
            assert!((v - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_profiles() {
        assert!(matches!(
            lid(&[2.0, 2.0, 2.0], 2.0),
            Err(Error::DegenerateDistances(_))
        ));
        assert!(matches!(
            lid(&[0.0, 1.0, 2.0], 2.0),
            Err(Error::DegenerateDistances(_))
        ));
        assert!(matches!(lid(&[1.0], 2.0), Err(Error::Usage(_))));
        assert!(matches!(lid(&[2.0, 1.0], 2.0), Err(Error::Usage(_))));
        assert!(matches!(lid(&[1.0, 3.0], 2.0), Err(Error::Usage(_))));
    }

    #[test]
    fn quantiles_of_quadratic_cdf() {
        // x_i = sqrt(i/k) are the exact quantiles of F(x) = x^2 on [0, 1].
        let k = 100;
        let d: Vec<f64> = (1..=k).map(|i| (i as f64 / k as f64).sqrt()).collect();
        let oracle_sum: f64 = (1..=k).map(|i| (k as f64 / i as f64).ln()).sum::<f64>() / k as f64;
        assert!((oracle_sum - 0.968).abs() < 1e-3);
        let v = lid(&d, 1.0).unwrap();
        assert!((v - 2.0 / oracle_sum).abs() < 1e-12);
        assert!((v - 2.07).abs() < 0.01);
    }

    #[test]
    fn self_match_is_dropped() {
        let base = VectorStore::from_rows(&[[0.0f32], [1.0], [2.0], [4.0]]).unwrap();
        let subject = base.slice(0, 1);
        let out = batch_lid(&subject, &base, 4).unwrap();
        // profile becomes [1, 2, 4] with w = 4
        assert!((out.values[0].unwrap() - 1.0 / std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(out.failures, 0);
    }

    #[test]
    fn batch_records_failures() {
        let base = VectorStore::from_rows(&[[0.0f32], [0.0], [0.0], [1.0]]).unwrap();
        let subject = base.slice(0, 1);
        let out = batch_lid(&subject, &base, 4).unwrap();
        assert_eq!(out.values, vec![None]);
        assert_eq!(out.failures, 1);
    }

    fn profile() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01f64..100.0, 2..40).prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            v
        })
    }

    proptest! {
        #[test]
        fn scale_invariant(d in profile(), c in 1e-3f64..1e3) {
            let w = *d.last().unwrap();
            prop_assume!(d[0] < w);
            let a = lid(&d, w).unwrap();
            let scaled: Vec<f64> = d.iter().map(|x| x * c).collect();
            let b = lid(&scaled, w * c).unwrap();
            prop_assert!(((a - b) / a).abs() <= 1e-12);
        }

        #[test]
        fn shrinking_a_distance_lowers_estimate(d in profile(), i in any::<prop::sample::Index>(), f in 0.1f64..0.99) {
            let w = *d.last().unwrap();
            let i = i.index(d.len());
            let mut e = d.clone();
            e[i] *= f;
            e.sort_by(f64::total_cmp);
            prop_assume!(d[0] < w);
            let before = lid(&d, w).unwrap();
            let after = lid(&e, w).unwrap();
            prop_assert!(after < before);
        }
    }
}
