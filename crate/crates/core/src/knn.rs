//! Exact k-nearest-neighbor search and the bounded result heap shared by
//! every index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::distance::l2_sq;
use crate::error::{Error, Result};
use crate::store::VectorStore;

/// A result entry. `dist` is the true Euclidean distance (or the square root
/// of an ADC estimate for quantized searches).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub dist: f64,
}

/// `(squared distance, id)` with total ordering; smaller id wins ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub dist_sq: f64,
    pub id: u32,
}

impl Scored {
    #[inline]
    pub fn new(dist_sq: f64, id: u32) -> Self {
        Self { dist_sq, id }
    }

    pub fn to_neighbor(self) -> Neighbor {
        Neighbor {
            id: self.id as usize,
            dist: self.dist_sq.sqrt(),
        }
    }
}

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.id.cmp(&other.id))
    }
}

/// Keeps the `k` best `Scored` entries seen so far; the worst is on top.
#[derive(Debug, Clone)]
pub struct TopKHeap {
    k: usize,
    heap: BinaryHeap<Scored>,
}

impl TopKHeap {
    pub fn new(k: usize) -> Self {
        assert!(k > 0, "TopKHeap capacity must be positive");
        Self {
            k,
            heap: BinaryHeap::with_capacity(k.min(1 << 16) + 1),
        }
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.heap.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    #[inline]
    pub fn is_full(&self) -> bool {
        self.heap.len() >= self.k
    }

    /// Worst retained entry.
    #[inline]
    pub fn worst(&self) -> Option<Scored> {
        self.heap.peek().copied()
    }

    /// Returns true when the entry was retained.
    #[inline]
    pub fn push(&mut self, s: Scored) -> bool {
        if self.heap.len() < self.k {
            self.heap.push(s);
            true
        } else if s < *self.heap.peek().expect("non-empty when full") {
            self.heap.pop();
            self.heap.push(s);
            true
        } else {
            false
        }
    }

    /// Entries in ascending order.
    pub fn into_sorted(self) -> Vec<Scored> {
        self.heap.into_sorted_vec()
    }

    pub fn sorted(&self) -> Vec<Scored> {
        self.clone().into_sorted()
    }
}

/// Exact k nearest neighbors of `query`, ascending, ties by smaller id.
pub fn brute_force_knn(store: &VectorStore, query: &[f32], k: usize) -> Result<Vec<Neighbor>> {
    if store.is_empty() {
        return Err(Error::usage("brute-force search over an empty store"));
    }
    if k == 0 || k > store.len() {
        return Err(Error::usage(format!(
            "k = {} must be in 1..={}",
            k,
            store.len()
        )));
    }
    store.check_query(query)?;
    let mut heap = TopKHeap::new(k);
    for (id, row) in store.rows().enumerate() {
        let d = l2_sq(query, row);
        if heap.is_full() && d > heap.worst().map_or(f64::INFINITY, |w| w.dist_sq) {
            continue;
        }
        heap.push(Scored::new(d, id as u32));
    }
    Ok(heap.into_sorted().into_iter().map(Scored::to_neighbor).collect())
}

/// Exact neighbors for every row of `queries`.
pub fn brute_force_batch(
    store: &VectorStore,
    queries: &VectorStore,
    k: usize,
) -> Result<Vec<Vec<Neighbor>>> {
    queries
        .rows()
        .map(|q| brute_force_knn(store, q, k))
        .collect()
}
