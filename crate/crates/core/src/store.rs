//! Dense row-major vector storage with implicit ids `0..count`.

use crate::error::{Error, Result};

/// A collection of fixed-dimension vectors. Row `i` has id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dim: usize,
    data: Vec<f32>,
}

impl VectorStore {
    /// Builds a store from row-major data. Every component must be finite.
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("vector dimension must be positive"));
        }
        if data.len() % dim != 0 {
            return Err(Error::usage(format!(
                "data length {} is not a multiple of dim {}",
                data.len(),
                dim
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::usage(format!(
                "non-finite component in row {}",
                pos / dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::usage("cannot infer dimension from zero rows"))?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::usage(format!(
                    "row {} has {} components, expected {}",
                    i,
                    r.len(),
                    dim
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, id: usize) -> &[f32] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Copies the selected rows, in order, into a new store.
    pub fn select(&self, ids: &[usize]) -> VectorStore {
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        for &id in ids {
            data.extend_from_slice(self.row(id));
        }
        VectorStore {
            dim: self.dim,
            data,
        }
    }

    /// Rows `start..end` as a new store.
    pub fn slice(&self, start: usize, end: usize) -> VectorStore {
        VectorStore {
            dim: self.dim,
            data: self.data[start * self.dim..end * self.dim].to_vec(),
        }
    }

    pub(crate) fn check_query(&self, query: &[f32]) -> Result<()> {
        if query.len() != self.dim {
            return Err(Error::usage(format!(
                "query has {} components, store has dim {}",
                query.len(),
                self.dim
            )));
        }
        Ok(())
    }
}
