//! Euclidean distance kernels.
//!
//! Ranking everywhere uses the squared distance; only reported distances are
//! square-rooted. Accumulation is always in `f64` regardless of the storage
//! type of either operand.

use crate::error::{Error, Result};

/// Component types that can feed a distance kernel.
pub trait Scalar: Copy + Send + Sync + 'static {
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Squared Euclidean distance. Panics in debug builds on length mismatch.
#[inline]
pub fn l2_sq<A: Scalar, B: Scalar>(a: &[A], b: &[B]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = c * 4;
        for lane in 0..4 {
            let d = a[i + lane].to_f64() - b[i + lane].to_f64();
            acc[lane] += d * d;
        }
    }
    let mut tail = 0.0;
    for i in chunks * 4..n {
        let d = a[i].to_f64() - b[i].to_f64();
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn l2<A: Scalar, B: Scalar>(a: &[A], b: &[B]) -> f64 {
    l2_sq(a, b).sqrt()
}

/// Checked Euclidean distance.
pub fn l2_distance(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::usage(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::usage("non-finite component"));
    }
    Ok(l2(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_values() {
        assert_eq!(l2_distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(l2_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(
            l2_distance(&[1.0, 1.0, 1.0, 1.0], &[2.0, 2.0, 2.0, 2.0]).unwrap(),
            2.0
        );
    }

    #[test]
    fn mismatch_is_usage_error() {
        assert!(matches!(
            l2_distance(&[1.0], &[1.0, 2.0]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn odd_lengths_use_tail() {
        let a = [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let b = [0.0f32; 7];
        assert_eq!(l2_sq(&a, &b), 140.0);
    }

    fn vec3(len: usize) -> impl Strategy<Value = (Vec<f32>, Vec<f32>, Vec<f32>)> {
        let v = || proptest::collection::vec(-1e3f32..1e3, len);
        (v(), v(), v())
    }

    proptest! {
        #[test]
        fn symmetric_and_triangle((a, b, c) in (1usize..40).prop_flat_map(vec3)) {
            let ab = l2(&a, &b);
            prop_assert_eq!(ab, l2(&b, &a));
            let ac = l2(&a, &c);
            let cb = l2(&c, &b);
            prop_assert!(ab <= ac + cb + 1e-9);
        }
    }
}
