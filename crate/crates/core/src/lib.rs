//! Approximate nearest neighbor search with learned, per-query early
//! termination.
//!
//! A query's local intrinsic dimension (LID) predicts how much search it
//! needs. Two small regressors map a query vector to a predicted LID and the
//! LID to a log2 search cost; the cost becomes a per-query budget
//! (`max(thresh, ceil(multiplier * 2^tc))`) that cuts off an HNSW traversal
//! (distance evaluations) or an IVF-PQ probe (number of clusters).

pub mod bench;
pub mod distance;
pub mod error;
pub mod hnsw;
pub mod io;
pub mod ivf;
pub mod kmeans;
pub mod knn;
pub mod lid;
pub mod mlp;
pub mod pipeline;
pub mod pq;
pub mod store;
pub mod synth;

pub use error::{Error, Result};
pub use knn::{brute_force_knn, Neighbor, TopKHeap};
pub use store::VectorStore;
