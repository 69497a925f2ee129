//! IVFADC index: a k-means coarse quantizer partitions the base set into
//! inverted lists, and each vector's residual to its centroid is stored as
//! a PQ code. Queries probe the `nprobe` nearest lists and rank codes by
//! asymmetric distance.

use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distance::l2_sq;
use crate::error::{Error, Result};
use crate::io::{read_file, write_file};
use crate::kmeans::{kmeans_train_slice, KMeansParams};
use crate::knn::{Neighbor, Scored, TopKHeap};
use crate::pq::{pq_train, PqCodebook};
use crate::store::VectorStore;

const MAGIC: &[u8; 8] = b"IVFPQv01";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IvfParams {
    pub nlist: usize,
    pub m: usize,
    pub ksub: usize,
    pub coarse_iters: usize,
    /// Base vectors sampled to train the coarse quantizer; `None` uses all.
    pub coarse_train_size: Option<usize>,
    pub pq_iters: usize,
    /// Residuals used to train the PQ codebook; `None` uses all of them.
    pub pq_train_size: Option<usize>,
    pub seed: u64,
}

impl Default for IvfParams {
    fn default() -> Self {
        Self {
            nlist: 1024,
            m: 8,
            ksub: 256,
            coarse_iters: 20,
            coarse_train_size: Some(65_536),
            pq_iters: 20,
            pq_train_size: Some(65_536),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvertedList {
    pub ids: Vec<u32>,
    /// `ids.len() * m` bytes.
    pub codes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IvfPqIndex {
    dim: usize,
    nlist: usize,
    centroids: Vec<f64>,
    codebook: PqCodebook,
    lists: Vec<InvertedList>,
    /// id -> list
    assignment: Vec<u32>,
}

/// Work counters for one quantized search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IvfStats {
    pub clusters_probed: usize,
    pub codes_scanned: usize,
}

impl IvfPqIndex {
    pub fn build(base: &VectorStore, params: &IvfParams) -> Result<Self> {
        let dim = base.dim();
        let n = base.len();
        if params.nlist == 0 || params.nlist > n {
            return Err(Error::usage(format!(
                "nlist = {} must be in 1..={}",
                params.nlist, n
            )));
        }
        let coarse_sample: Vec<f32>;
        let coarse_data = match params.coarse_train_size {
            Some(s) if s < n => {
                let s = s.max(params.nlist);
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0xc0a5_5e);
                let mut pick = sample(&mut rng, n, s).into_vec();
                pick.sort_unstable();
                coarse_sample = pick.iter().flat_map(|&i| base.row(i).iter().copied()).collect();
                &coarse_sample[..]
            }
            _ => base.as_slice(),
        };
        let coarse = kmeans_train_slice(
            coarse_data,
            dim,
            KMeansParams {
                k: params.nlist,
                max_iters: params.coarse_iters,
                seed: params.seed,
            },
        )?;

        let mut assignment = Vec::with_capacity(n);
        let mut residuals = Vec::with_capacity(n * dim);
        for v in base.rows() {
            let (c, _) = coarse.assign(v);
            assignment.push(c as u32);
            residuals.extend(v.iter().zip(coarse.centroid(c)).map(|(x, c)| *x as f64 - c));
        }

        let train: Vec<f64> = match params.pq_train_size {
            Some(s) if s < n => {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed_0f_9a);
                let mut pick = sample(&mut rng, n, s).into_vec();
                pick.sort_unstable();
                pick.iter()
                    .flat_map(|&i| residuals[i * dim..(i + 1) * dim].iter().copied())
                    .collect()
            }
            _ => residuals.clone(),
        };
        let codebook = pq_train(
            &train,
            dim,
            params.m,
            params.ksub,
            params.pq_iters,
            params.seed.wrapping_add(1),
        )?;

        let mut lists = vec![InvertedList::default(); params.nlist];
        let mut code = vec![0u8; params.m];
        for (id, r) in residuals.chunks_exact(dim).enumerate() {
            codebook.encode_into(r, &mut code);
            let list = &mut lists[assignment[id] as usize];
            list.ids.push(id as u32);
            list.codes.extend_from_slice(&code);
        }
        Ok(Self {
            dim,
            nlist: params.nlist,
            centroids: coarse.centroids,
            codebook,
            lists,
            assignment,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nlist(&self) -> usize {
        self.nlist
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn codebook(&self) -> &PqCodebook {
        &self.codebook
    }

    pub fn lists(&self) -> &[InvertedList] {
        &self.lists
    }

    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    /// List that holds `id`, if any.
    pub fn list_of(&self, id: usize) -> Option<usize> {
        self.assignment.get(id).map(|&c| c as usize)
    }

    /// Centroids ranked by distance to `query`, ties by index.
    pub fn rank_clusters(&self, query: &[f32]) -> Vec<Scored> {
        let mut ranked: Vec<Scored> = self
            .centroids
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(c, cent)| Scored::new(l2_sq(query, cent), c as u32))
            .collect();
        ranked.sort_unstable();
        ranked
    }

    /// Residual of `query` against centroid `c`.
    pub fn residual(&self, query: &[f32], c: usize) -> Vec<f64> {
        query
            .iter()
            .zip(self.centroid(c))
            .map(|(q, c)| *q as f64 - c)
            .collect()
    }

    /// Probes the `nprobe` nearest lists and returns the `k` best codes by
    /// ADC distance. Reported distances are square roots of ADC estimates.
    pub fn search(&self, query: &[f32], nprobe: usize, k: usize) -> Result<(Vec<Neighbor>, IvfStats)> {
        if query.len() != self.dim {
            return Err(Error::usage("query dimension does not match index"));
        }
        if nprobe == 0 || nprobe > self.nlist {
            return Err(Error::usage(format!(
                "nprobe = {} must be in 1..={}",
                nprobe, self.nlist
            )));
        }
        if k == 0 {
            return Err(Error::usage("k must be positive"));
        }
        let ranked = self.rank_clusters(query);
        let mut heap = TopKHeap::new(k);
        let mut stats = IvfStats::default();
        let m = self.codebook.m;
        for probe in &ranked[..nprobe] {
            let c = probe.id as usize;
            stats.clusters_probed += 1;
            let list = &self.lists[c];
            if list.ids.is_empty() {
                continue;
            }
            let table = self.codebook.adc_table(&self.residual(query, c));
            for (id, code) in list.ids.iter().zip(list.codes.chunks_exact(m)) {
                heap.push(Scored::new(table.distance_sq(code), *id));
            }
            stats.codes_scanned += list.ids.len();
        }
        Ok((
            heap.into_sorted().into_iter().map(Scored::to_neighbor).collect(),
            stats,
        ))
    }

    /// Smallest `nprobe` whose probed lists contain `gt_id`: the 1-based rank
    /// of its list in the query's centroid ordering.
    pub fn label_min_nprobe(&self, query: &[f32], gt_id: usize) -> Result<usize> {
        let list = self.list_of(gt_id).ok_or_else(|| {
            Error::IndexCorruption(format!("id {gt_id} is not stored in any inverted list"))
        })?;
        if !self.lists[list].ids.contains(&(gt_id as u32)) {
            return Err(Error::IndexCorruption(format!(
                "id {gt_id} missing from its inverted list {list}"
            )));
        }
        let target = Scored::new(l2_sq(query, self.centroid(list)), list as u32);
        let ahead = self
            .centroids
            .chunks_exact(self.dim)
            .enumerate()
            .filter(|&(c, cent)| Scored::new(l2_sq(query, cent), c as u32) < target)
            .count();
        Ok(ahead + 1)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let m = self.codebook.m;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        for v in [self.dim, self.nlist, m, self.codebook.ksub, self.assignment.len()] {
            out.write_u32::<LittleEndian>(v as u32).expect("vec write");
        }
        for &c in &self.centroids {
            out.write_f64::<LittleEndian>(c).expect("vec write");
        }
        for &c in &self.codebook.centroids {
            out.write_f64::<LittleEndian>(c).expect("vec write");
        }
        for list in &self.lists {
            out.write_u32::<LittleEndian>(list.ids.len() as u32).expect("vec write");
            for (id, code) in list.ids.iter().zip(list.codes.chunks_exact(m)) {
                out.write_u32::<LittleEndian>(*id).expect("vec write");
                out.extend_from_slice(code);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: &str| Error::format(path, msg);
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(bad("not an IVF-PQ index file"));
        }
        let mut cur = &bytes[MAGIC.len()..];
        let mut u32s = [0usize; 5];
        for v in &mut u32s {
            *v = cur.read_u32::<LittleEndian>().map_err(|_| bad("truncated header"))? as usize;
        }
        let [dim, nlist, m, ksub, n] = u32s;
        if dim == 0 || m == 0 || dim % m != 0 || ksub == 0 || ksub > 256 || nlist == 0 {
            return Err(bad("inconsistent header"));
        }
        let read_f64s = |count: usize, cur: &mut &[u8]| -> Result<Vec<f64>> {
            if cur.len() < count * 8 {
                return Err(bad("truncated float block"));
            }
            Ok((0..count)
                .map(|_| cur.read_f64::<LittleEndian>().expect("length checked"))
                .collect())
        };
        let centroids = read_f64s(nlist * dim, &mut cur)?;
        let book = read_f64s(m * ksub * (dim / m), &mut cur)?;
        let codebook = PqCodebook::from_tables(dim, m, ksub, book)?;
        let mut lists = Vec::with_capacity(nlist);
        let mut assignment = vec![u32::MAX; n];
        for c in 0..nlist {
            let len = cur.read_u32::<LittleEndian>().map_err(|_| bad("truncated list"))? as usize;
            if cur.len() < len * (4 + m) {
                return Err(bad("truncated list body"));
            }
            let mut list = InvertedList {
                ids: Vec::with_capacity(len),
                codes: Vec::with_capacity(len * m),
            };
            for _ in 0..len {
                let id = cur.read_u32::<LittleEndian>().expect("length checked");
                let slot = assignment
                    .get_mut(id as usize)
                    .ok_or_else(|| bad("id out of range"))?;
                if *slot != u32::MAX {
                    return Err(bad("id stored twice"));
                }
                *slot = c as u32;
                list.ids.push(id);
                list.codes.extend_from_slice(&cur[..m]);
                cur = &cur[m..];
            }
            lists.push(list);
        }
        if !cur.is_empty() {
            return Err(bad("trailing bytes"));
        }
        if assignment.contains(&u32::MAX) {
            return Err(bad("inverted lists do not cover every id"));
        }
        Ok(Self {
            dim,
            nlist,
            centroids,
            codebook,
            lists,
            assignment,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?, path)
    }
}
