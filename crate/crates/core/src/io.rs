//! Benchmark vector file formats (`.fvecs` / `.bvecs` / `.ivecs`), dataset
//! splitting and ground-truth persistence.
//!
//! Every record is a little-endian `i32` dimension followed by that many
//! components. All records of a file share one dimension.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distance::l2_sq;
use crate::error::{Error, Result};
use crate::knn::{brute_force_knn, Neighbor, Scored};
use crate::store::VectorStore;

/// Per-component encoding of a vector file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFormat {
    /// `.fvecs`: 4-byte little-endian floats.
    F32,
    /// `.bvecs`: unsigned bytes.
    U8,
    /// `.ivecs`: 4-byte little-endian signed integers.
    I32,
}

impl VectorFormat {
    fn component_bytes(self) -> usize {
        match self {
            VectorFormat::F32 | VectorFormat::I32 => 4,
            VectorFormat::U8 => 1,
        }
    }

    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "fvecs" => Some(VectorFormat::F32),
            "bvecs" => Some(VectorFormat::U8),
            "ivecs" => Some(VectorFormat::I32),
            _ => None,
        }
    }
}

impl FromStr for VectorFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" | "fvecs" => Ok(VectorFormat::F32),
            "u8" | "bvecs" => Ok(VectorFormat::U8),
            "i32" | "ivecs" => Ok(VectorFormat::I32),
            other => Err(Error::usage(format!("unknown vector format '{other}'"))),
        }
    }
}

/// Parses an in-memory vector file. `path` is only used for error messages.
pub fn parse_vectors(bytes: &[u8], format: VectorFormat, path: &Path) -> Result<VectorStore> {
    if bytes.is_empty() {
        return Err(Error::format(path, "empty file"));
    }
    let mut cur = bytes;
    let mut dim: Option<usize> = None;
    let mut data = Vec::new();
    let mut record = 0usize;
    while !cur.is_empty() {
        if cur.len() < 4 {
            return Err(Error::format(
                path,
                format!("truncated header at record {record}"),
            ));
        }
        let d = cur.read_i32::<LittleEndian>().expect("length checked");
        if d <= 0 {
            return Err(Error::format(
                path,
                format!("non-positive dimension {d} at record {record}"),
            ));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::format(
                    path,
                    format!("record {record} has dimension {d}, expected {expected}"),
                ))
            }
            _ => {}
        }
        let need = d * format.component_bytes();
        if cur.len() < need {
            return Err(Error::format(
                path,
                format!("truncated body at record {record}"),
            ));
        }
        let (body, rest) = cur.split_at(need);
        match format {
            VectorFormat::F32 => data.extend(
                body.chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
            ),
            VectorFormat::I32 => data.extend(
                body.chunks_exact(4)
                    .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f32),
            ),
            VectorFormat::U8 => data.extend(body.iter().map(|&b| b as f32)),
        }
        cur = rest;
        record += 1;
    }
    VectorStore::new(dim.expect("at least one record"), data)
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn read_vectors(path: impl AsRef<Path>, format: VectorFormat) -> Result<VectorStore> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    parse_vectors(&bytes, format, path)
}

/// Serializes a store; fails on components the format cannot represent exactly.
pub fn encode_vectors(store: &VectorStore, format: VectorFormat) -> Result<Vec<u8>> {
    let dim = store.dim();
    let mut out = Vec::with_capacity(store.len() * (4 + dim * format.component_bytes()));
    for (i, row) in store.rows().enumerate() {
        out.write_i32::<LittleEndian>(dim as i32).expect("vec write");
        for &x in row {
            match format {
                VectorFormat::F32 => out.extend_from_slice(&x.to_le_bytes()),
                VectorFormat::U8 => {
                    if x.fract() != 0.0 || !(0.0..=255.0).contains(&x) {
                        return Err(Error::usage(format!(
                            "row {i}: component {x} is not representable as u8"
                        )));
                    }
                    out.push(x as u8);
                }
                VectorFormat::I32 => {
                    if x.fract() != 0.0 || x < i32::MIN as f32 || x >= i32::MAX as f32 {
                        return Err(Error::usage(format!(
                            "row {i}: component {x} is not representable as i32"
                        )));
                    }
                    out.extend_from_slice(&(x as i32).to_le_bytes());
                }
            }
        }
    }
    Ok(out)
}

pub fn write_vectors(store: &VectorStore, path: impl AsRef<Path>, format: VectorFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_vectors(store, format)?;
    write_file(path, &bytes)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// How rows are assigned to the training and query sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPolicy {
    /// Training = first rows, queries = next rows, base = remainder.
    ContiguousPrefix,
    /// Same layout applied to a seeded permutation of the rows.
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub training_count: usize,
    pub query_count: usize,
    pub policy: SplitPolicy,
}

impl SplitSpec {
    pub fn contiguous(training_count: usize, query_count: usize) -> Self {
        Self {
            training_count,
            query_count,
            policy: SplitPolicy::ContiguousPrefix,
        }
    }
}

/// Output of [`split_dataset`]. Each `*_origin` maps a new id to the row it
/// came from in the input store.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub base: VectorStore,
    pub training: VectorStore,
    pub queries: VectorStore,
    pub base_origin: Vec<usize>,
    pub training_origin: Vec<usize>,
    pub query_origin: Vec<usize>,
}

pub fn split_dataset(base: &VectorStore, spec: SplitSpec) -> Result<DatasetSplit> {
    let n = base.len();
    let taken = spec
        .training_count
        .checked_add(spec.query_count)
        .filter(|&t| t <= n)
        .ok_or_else(|| {
            Error::usage(format!(
                "split of {} training + {} queries exceeds {} rows",
                spec.training_count, spec.query_count, n
            ))
        })?;
    let mut order: Vec<usize> = (0..n).collect();
    if let SplitPolicy::Shuffled { seed } = spec.policy {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let training_origin = order[..spec.training_count].to_vec();
    let query_origin = order[spec.training_count..taken].to_vec();
    let base_origin = order[taken..].to_vec();
    Ok(DatasetSplit {
        base: base.select(&base_origin),
        training: base.select(&training_origin),
        queries: base.select(&query_origin),
        base_origin,
        training_origin,
        query_origin,
    })
}

/// Exact neighbor lists for a query set. Every row has the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTable {
    rows: Vec<Vec<Neighbor>>,
}

impl GroundTruthTable {
    pub fn new(rows: Vec<Vec<Neighbor>>) -> Result<Self> {
        if let Some(first) = rows.first() {
            let g = first.len();
            if g == 0 || rows.iter().any(|r| r.len() != g) {
                return Err(Error::usage("ground-truth rows must share a positive length"));
            }
        }
        Ok(Self { rows })
    }

    pub fn compute(base: &VectorStore, queries: &VectorStore, depth: usize) -> Result<Self> {
        if depth == 0 || depth > base.len() {
            return Err(Error::usage(format!(
                "ground-truth depth {} must be in 1..={}",
                depth,
                base.len()
            )));
        }
        let rows = queries
            .rows()
            .map(|q| brute_force_knn(base, q, depth))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn row(&self, q: usize) -> &[Neighbor] {
        &self.rows[q]
    }

    pub fn rows(&self) -> &[Vec<Neighbor>] {
        &self.rows
    }

    /// Writes ids as `.ivecs` to `ids_path` and distances as `.fvecs` to `dist_path`.
    pub fn save(&self, ids_path: &Path, dist_path: &Path) -> Result<()> {
        let g = self.depth();
        let dists: Vec<f32> = self
            .rows
            .iter()
            .flat_map(|r| r.iter().map(|n| n.dist as f32))
            .collect();
        let mut id_bytes = Vec::with_capacity(self.rows.len() * (4 + 4 * g));
        for row in &self.rows {
            id_bytes.write_i32::<LittleEndian>(g as i32).expect("vec write");
            for n in row {
                id_bytes.write_i32::<LittleEndian>(n.id as i32).expect("vec write");
            }
        }
        write_file(ids_path, &id_bytes)?;
        if g == 0 {
            return write_file(dist_path, &[]);
        }
        write_vectors(&VectorStore::new(g, dists)?, dist_path, VectorFormat::F32)
    }

    /// Reloads a table written by [`GroundTruthTable::save`]. Distances come
    /// back at `f32` precision.
    pub fn load(ids_path: &Path, dist_path: &Path) -> Result<Self> {
        let id_bytes = read_file(ids_path)?;
        let ids = parse_i32_records(&id_bytes, ids_path)?;
        let dists = read_vectors(dist_path, VectorFormat::F32)?;
        if dists.len() != ids.len() || ids.first().map_or(0, Vec::len) != dists.dim() {
            return Err(Error::format(
                dist_path,
                "distance sidecar shape does not match id file",
            ));
        }
        let rows = ids
            .into_iter()
            .zip(dists.rows())
            .map(|(ids, ds)| {
                ids.into_iter()
                    .zip(ds)
                    .map(|(id, &d)| Neighbor {
                        id: id as usize,
                        dist: d as f64,
                    })
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    /// Loads an id-only ground-truth file (the common distribution format)
    /// and recomputes exact distances against `base`. Rows are re-sorted by
    /// `(distance, id)`.
    pub fn load_ids(ids_path: &Path, base: &VectorStore, queries: &VectorStore) -> Result<Self> {
        let ids = parse_i32_records(&read_file(ids_path)?, ids_path)?;
        if ids.len() != queries.len() {
            return Err(Error::format(
                ids_path,
                format!("{} ground-truth rows for {} queries", ids.len(), queries.len()),
            ));
        }
        let mut rows = Vec::with_capacity(ids.len());
        for (row, q) in ids.into_iter().zip(queries.rows()) {
            let mut scored = Vec::with_capacity(row.len());
            for id in row {
                let id = id as usize;
                if id >= base.len() {
                    return Err(Error::format(ids_path, format!("id {id} out of range")));
                }
                scored.push(Scored::new(l2_sq(q, base.row(id)), id as u32));
            }
            scored.sort_unstable();
            rows.push(scored.into_iter().map(Scored::to_neighbor).collect());
        }
        Self::new(rows)
    }

    /// [`GroundTruthTable::load`] when the distance sidecar exists,
    /// [`GroundTruthTable::load_ids`] otherwise.
    pub fn load_auto(ids_path: &Path, base: &VectorStore, queries: &VectorStore) -> Result<Self> {
        let sidecar = distance_sidecar_path(ids_path);
        let table = if sidecar.exists() {
            Self::load(ids_path, &sidecar)?
        } else {
            Self::load_ids(ids_path, base, queries)?
        };
        if table.len() != queries.len() {
            return Err(Error::format(ids_path, "ground-truth row count does not match queries"));
        }
        Ok(table)
    }

    /// Rounds distances through `f32`, matching what [`GroundTruthTable::load`] returns.
    pub fn to_f32_precision(&self) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|n| Neighbor {
                            id: n.id,
                            dist: n.dist as f32 as f64,
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

fn parse_i32_records(bytes: &[u8], path: &Path) -> Result<Vec<Vec<i64>>> {
    if bytes.is_empty() {
        return Err(Error::format(path, "empty file"));
    }
    let mut cur = bytes;
    let mut out = Vec::new();
    while !cur.is_empty() {
        let d = cur
            .read_i32::<LittleEndian>()
            .map_err(|_| Error::format(path, format!("truncated header at record {}", out.len())))?;
        if d <= 0 {
            return Err(Error::format(path, format!("non-positive dimension at record {}", out.len())));
        }
        let mut row = Vec::with_capacity(d as usize);
        for _ in 0..d {
            let v = cur
                .read_i32::<LittleEndian>()
                .map_err(|_| Error::format(path, format!("truncated body at record {}", out.len())))?;
            if v < 0 {
                return Err(Error::format(path, format!("negative id at record {}", out.len())));
            }
            row.push(v as i64);
        }
        out.push(row);
    }
    Ok(out)
}

/// Runs the exact search for every query, persists it, and returns the table.
pub fn compute_and_save_ground_truth(
    base: &VectorStore,
    queries: &VectorStore,
    depth: usize,
    ids_path: &Path,
) -> Result<GroundTruthTable> {
    let table = GroundTruthTable::compute(base, queries, depth)?;
    table.save(ids_path, &distance_sidecar_path(ids_path))?;
    Ok(table)
}

/// `gt.ivecs` → `gt.dist.fvecs`.
pub fn distance_sidecar_path(ids_path: &Path) -> PathBuf {
    let stem = ids_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "groundtruth".into());
    ids_path.with_file_name(format!("{stem}.dist.fvecs"))
}
