//! Hierarchical navigable small-world graph.
//!
//! Besides the usual fixed-`efSearch` query, the graph supports a budgeted
//! traversal that stops once the number of distance evaluations exceeds a
//! per-query cap, and a labeler that reports how many evaluations a query
//! needs before its true nearest neighbor is first touched.
//!
//! Every search counts *all* query-to-vector distance evaluations, upper
//! levels included, so the labeler and the budget measure the same quantity.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distance::l2_sq;
use crate::error::{Error, Result};
use crate::io::{read_file, write_file};
use crate::knn::{Neighbor, Scored, TopKHeap};
use crate::store::VectorStore;

const MAGIC: &[u8; 8] = b"HNSWv001";
const MAX_LEVEL: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HnswParams {
    /// Max links per node on upper levels; level 0 allows `2 * m`.
    pub m: usize,
    pub ef_construction: usize,
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 200,
            seed: 42,
        }
    }
}

/// Cap on distance evaluations for one adaptive search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchBudget {
    Unbounded,
    MaxNdis(usize),
}

impl SearchBudget {
    pub fn max_ndis(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::usage("search budget must be at least 1"));
        }
        Ok(SearchBudget::MaxNdis(n))
    }

    fn limit(self) -> Option<usize> {
        match self {
            SearchBudget::Unbounded => None,
            SearchBudget::MaxNdis(n) => Some(n),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Distance evaluations, all levels.
    pub ndis: usize,
    /// Vertices whose neighbor lists were expanded.
    pub hops: usize,
}

/// Outcome of [`HnswGraph::label_min_ndis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinNdis {
    Reached(usize),
    NotReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HnswGraph {
    dim: usize,
    params: HnswParams,
    levels: Vec<u8>,
    /// `links[node][level]`
    links: Vec<Vec<Vec<u32>>>,
    entry: u32,
    max_level: usize,
}

/// Distance oracle with evaluation counting and optional target detection.
struct Probe<F> {
    dist: F,
    ndis: usize,
    hops: usize,
    target: Option<u32>,
    found_at: Option<usize>,
}

impl<F: FnMut(u32) -> f64> Probe<F> {
    fn new(dist: F, target: Option<u32>) -> Self {
        Self {
            dist,
            ndis: 0,
            hops: 0,
            target,
            found_at: None,
        }
    }

    #[inline]
    fn eval(&mut self, id: u32) -> f64 {
        self.ndis += 1;
        if self.found_at.is_none() && self.target == Some(id) {
            self.found_at = Some(self.ndis);
        }
        (self.dist)(id)
    }

    fn stats(&self) -> SearchStats {
        SearchStats {
            ndis: self.ndis,
            hops: self.hops,
        }
    }
}

impl HnswGraph {
    pub fn build(base: &VectorStore, params: HnswParams) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::usage("cannot build a graph over an empty store"));
        }
        if params.m < 2 {
            return Err(Error::usage("HNSW needs M >= 2"));
        }
        if params.ef_construction == 0 {
            return Err(Error::usage("efConstruction must be positive"));
        }
        let n = base.len();
        let ml = 1.0 / (params.m as f64).ln();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut graph = HnswGraph {
            dim: base.dim(),
            params,
            levels: Vec::with_capacity(n),
            links: Vec::with_capacity(n),
            entry: 0,
            max_level: 0,
        };
        let mut visited = Visited::new(n);
        for id in 0..n {
            let u: f64 = 1.0 - rng.random::<f64>();
            let level = ((-u.ln() * ml).floor() as usize).min(MAX_LEVEL);
            graph.insert(base, id as u32, level, &mut visited);
        }
        Ok(graph)
    }

    fn bound(&self, level: usize) -> usize {
        if level == 0 {
            2 * self.params.m
        } else {
            self.params.m
        }
    }

    fn insert(&mut self, base: &VectorStore, id: u32, level: usize, visited: &mut Visited) {
        self.levels.push(level as u8);
        self.links.push(vec![Vec::new(); level + 1]);
        if id == 0 {
            self.entry = 0;
            self.max_level = level;
            return;
        }
        let q = base.row(id as usize);
        let mut probe = Probe::new(|v: u32| l2_sq(q, base.row(v as usize)), None);
        let mut ep = Scored::new(probe.eval(self.entry), self.entry);
        for l in (level + 1..=self.max_level).rev() {
            ep = self.greedy_closest(&mut probe, ep, l);
        }
        for l in (0..=level.min(self.max_level)).rev() {
            visited.clear();
            let found = self.search_layer(&mut probe, &[ep], self.params.ef_construction, l, None, visited);
            let candidates = found.into_sorted();
            ep = candidates[0];
            let chosen: Vec<u32> = candidates
                .iter()
                .take(self.params.m)
                .map(|s| s.id)
                .collect();
            for &nb in &chosen {
                self.connect(base, nb, id, l);
            }
            self.links[id as usize][l] = chosen;
        }
        if level > self.max_level {
            self.max_level = level;
            self.entry = id;
        }
    }

    /// Adds `to` to `from`'s list at `level`, trimming to the closest `bound` links.
    fn connect(&mut self, base: &VectorStore, from: u32, to: u32, level: usize) {
        let bound = self.bound(level);
        let list = &mut self.links[from as usize][level];
        list.push(to);
        if list.len() <= bound {
            return;
        }
        let origin = base.row(from as usize);
        let mut scored: Vec<Scored> = list
            .iter()
            .map(|&v| Scored::new(l2_sq(origin, base.row(v as usize)), v))
            .collect();
        scored.sort_unstable();
        scored.truncate(bound);
        *list = scored.into_iter().map(|s| s.id).collect();
    }

    fn greedy_closest<F: FnMut(u32) -> f64>(&self, probe: &mut Probe<F>, mut cur: Scored, level: usize) -> Scored {
        loop {
            let mut moved = false;
            for &nb in &self.links[cur.id as usize][level] {
                let cand = Scored::new(probe.eval(nb), nb);
                if cand < cur {
                    cur = cand;
                    moved = true;
                }
            }
            if !moved {
                return cur;
            }
        }
    }

    /// Best-first beam search on one level. Stops when the closest pending
    /// candidate is worse than the full beam's worst entry, when the queue
    /// empties, or (if `budget` is set) after the first vertex expansion that
    /// leaves `ndis` above the budget.
    fn search_layer<F: FnMut(u32) -> f64>(
        &self,
        probe: &mut Probe<F>,
        entries: &[Scored],
        ef: usize,
        level: usize,
        budget: Option<usize>,
        visited: &mut Visited,
    ) -> TopKHeap {
        let mut beam = TopKHeap::new(ef);
        let mut queue: BinaryHeap<Reverse<Scored>> = BinaryHeap::new();
        for &e in entries {
            if visited.insert(e.id) {
                beam.push(e);
                queue.push(Reverse(e));
            }
        }
        while let Some(Reverse(c)) = queue.pop() {
            if beam.is_full() && Some(c) > beam.worst() {
                break;
            }
            probe.hops += 1;
            for &nb in &self.links[c.id as usize][level] {
                if !visited.insert(nb) {
                    continue;
                }
                let cand = Scored::new(probe.eval(nb), nb);
                if !beam.is_full() || Some(cand) < beam.worst() {
                    beam.push(cand);
                    queue.push(Reverse(cand));
                }
            }
            if let Some(limit) = budget {
                if probe.ndis > limit {
                    break;
                }
            }
            if probe.target.is_some() && probe.found_at.is_some() {
                break;
            }
        }
        beam
    }

    /// Upper-level greedy descent followed by the level-0 beam search.
    fn traverse<F: FnMut(u32) -> f64>(
        &self,
        probe: &mut Probe<F>,
        ef: usize,
        budget: Option<usize>,
    ) -> TopKHeap {
        let mut ep = Scored::new(probe.eval(self.entry), self.entry);
        for l in (1..=self.max_level).rev() {
            ep = self.greedy_closest(probe, ep, l);
        }
        let mut visited = Visited::new(self.len());
        self.search_layer(probe, &[ep], ef, 0, budget, &mut visited)
    }

    fn finish(beam: TopKHeap, k: usize) -> Vec<Neighbor> {
        let mut out = beam.into_sorted();
        out.truncate(k);
        out.into_iter().map(Scored::to_neighbor).collect()
    }

    /// Standard query with beam width `ef_search` on level 0.
    pub fn search_fixed(
        &self,
        base: &VectorStore,
        query: &[f32],
        k: usize,
        ef_search: usize,
    ) -> Result<(Vec<Neighbor>, SearchStats)> {
        base.check_query(query)?;
        self.search_fixed_with(|v| l2_sq(query, base.row(v as usize)), k, ef_search)
    }

    /// [`HnswGraph::search_fixed`] with a caller-supplied squared-distance oracle.
    pub fn search_fixed_with<F: FnMut(u32) -> f64>(
        &self,
        dist: F,
        k: usize,
        ef_search: usize,
    ) -> Result<(Vec<Neighbor>, SearchStats)> {
        if k == 0 {
            return Err(Error::usage("k must be positive"));
        }
        if ef_search < k {
            return Err(Error::usage(format!("efSearch = {ef_search} is below k = {k}")));
        }
        let mut probe = Probe::new(dist, None);
        let beam = self.traverse(&mut probe, ef_search, None);
        Ok((Self::finish(beam, k), probe.stats()))
    }

    /// Budgeted query: the same traversal as an unbounded-beam fixed search,
    /// cut off after the first vertex expansion that pushes `ndis` past the
    /// budget.
    pub fn search_adaptive(
        &self,
        base: &VectorStore,
        query: &[f32],
        k: usize,
        budget: SearchBudget,
    ) -> Result<(Vec<Neighbor>, SearchStats)> {
        base.check_query(query)?;
        self.search_adaptive_with(|v| l2_sq(query, base.row(v as usize)), k, budget)
    }

    pub fn search_adaptive_with<F: FnMut(u32) -> f64>(
        &self,
        dist: F,
        k: usize,
        budget: SearchBudget,
    ) -> Result<(Vec<Neighbor>, SearchStats)> {
        if k == 0 {
            return Err(Error::usage("k must be positive"));
        }
        if budget == SearchBudget::MaxNdis(0) {
            return Err(Error::usage("search budget must be at least 1"));
        }
        let mut probe = Probe::new(dist, None);
        let beam = self.traverse(&mut probe, self.adaptive_beam(k), budget.limit());
        Ok((Self::finish(beam, k), probe.stats()))
    }

    fn adaptive_beam(&self, k: usize) -> usize {
        self.len().max(k)
    }

    /// Number of distance evaluations the budgeted traversal spends before
    /// `gt_id` is first evaluated. `cap` defaults to `len * average degree`.
    pub fn label_min_ndis(
        &self,
        base: &VectorStore,
        query: &[f32],
        gt_id: usize,
        cap: Option<usize>,
    ) -> Result<MinNdis> {
        base.check_query(query)?;
        self.label_min_ndis_with(|v| l2_sq(query, base.row(v as usize)), gt_id, cap)
    }

    pub fn label_min_ndis_with<F: FnMut(u32) -> f64>(
        &self,
        dist: F,
        gt_id: usize,
        cap: Option<usize>,
    ) -> Result<MinNdis> {
        if gt_id >= self.len() {
            return Err(Error::usage(format!(
                "ground-truth id {gt_id} out of range for {} nodes",
                self.len()
            )));
        }
        let cap = cap.unwrap_or_else(|| self.default_label_cap());
        let mut probe = Probe::new(dist, Some(gt_id as u32));
        // an unbounded traversal stops by itself once the target is seen
        self.traverse(&mut probe, self.adaptive_beam(1), Some(cap));
        Ok(match probe.found_at {
            Some(n) if n <= cap => MinNdis::Reached(n),
            _ => MinNdis::NotReached,
        })
    }

    pub fn default_label_cap(&self) -> usize {
        let edges: usize = self.links.iter().map(|l| l[0].len()).sum();
        edges.max(self.len())
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> HnswParams {
        self.params
    }

    pub fn entry_point(&self) -> usize {
        self.entry as usize
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn level_of(&self, id: usize) -> usize {
        self.levels[id] as usize
    }

    pub fn neighbors(&self, id: usize, level: usize) -> &[u32] {
        &self.links[id][level]
    }

    /// Largest level-0 degree in the graph.
    pub fn max_degree(&self) -> usize {
        self.links.iter().map(|l| l[0].len()).max().unwrap_or(0)
    }

    /// Checks degree bounds, edge validity and the entry-point level.
    pub fn audit(&self) -> Result<()> {
        let n = self.len() as u32;
        if self.level_of(self.entry as usize) != self.max_level {
            return Err(Error::IndexCorruption("entry point is not on the top level".into()));
        }
        for (id, per_level) in self.links.iter().enumerate() {
            for (l, list) in per_level.iter().enumerate() {
                if list.len() > self.bound(l) {
                    return Err(Error::IndexCorruption(format!(
                        "node {id} level {l} has {} links",
                        list.len()
                    )));
                }
                if let Some(bad) = list
                    .iter()
                    .find(|&&v| v >= n || v as usize == id || self.levels[v as usize] < l as u8)
                {
                    return Err(Error::IndexCorruption(format!(
                        "node {id} level {l} links to invalid node {bad}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        for v in [
            self.dim,
            self.len(),
            self.params.m,
            self.params.ef_construction,
            self.max_level,
            self.entry as usize,
        ] {
            out.write_u32::<LittleEndian>(v as u32).expect("vec write");
        }
        out.write_u64::<LittleEndian>(self.params.seed).expect("vec write");
        out.extend_from_slice(&self.levels);
        for l in 0..=self.max_level {
            for per_level in self.links.iter().filter(|p| p.len() > l) {
                let list = &per_level[l];
                out.write_u32::<LittleEndian>(list.len() as u32).expect("vec write");
                for &v in list {
                    out.write_u32::<LittleEndian>(v).expect("vec write");
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: &str| Error::format(path, msg);
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(bad("not an HNSW graph file"));
        }
        let mut cur = &bytes[MAGIC.len()..];
        let mut h = [0usize; 6];
        for v in &mut h {
            *v = cur.read_u32::<LittleEndian>().map_err(|_| bad("truncated header"))? as usize;
        }
        let [dim, n, m, ef_construction, max_level, entry] = h;
        let seed = cur.read_u64::<LittleEndian>().map_err(|_| bad("truncated header"))?;
        if n == 0 || entry >= n || max_level > MAX_LEVEL || cur.len() < n {
            return Err(bad("inconsistent header"));
        }
        let levels = cur[..n].to_vec();
        cur = &cur[n..];
        let mut links: Vec<Vec<Vec<u32>>> = levels
            .iter()
            .map(|&l| vec![Vec::new(); l as usize + 1])
            .collect();
        for l in 0..=max_level {
            for per_level in links.iter_mut().filter(|p| p.len() > l) {
                let len = cur.read_u32::<LittleEndian>().map_err(|_| bad("truncated links"))? as usize;
                if cur.len() < 4 * len {
                    return Err(bad("truncated links"));
                }
                per_level[l] = (0..len)
                    .map(|_| cur.read_u32::<LittleEndian>().expect("length checked"))
                    .collect();
            }
        }
        if !cur.is_empty() {
            return Err(bad("trailing bytes"));
        }
        let graph = HnswGraph {
            dim,
            params: HnswParams {
                m,
                ef_construction,
                seed,
            },
            levels,
            links,
            entry: entry as u32,
            max_level,
        };
        graph.audit().map_err(|e| bad(&e.to_string()))?;
        Ok(graph)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?, path)
    }
}

/// Visited-node bitmap with cheap reset.
struct Visited {
    marks: Vec<u32>,
    epoch: u32,
}

impl Visited {
    fn new(n: usize) -> Self {
        Self {
            marks: vec![0; n],
            epoch: 1,
        }
    }

    fn clear(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    /// Returns true if `id` was not yet marked.
    #[inline]
    fn insert(&mut self, id: u32) -> bool {
        let slot = &mut self.marks[id as usize];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::brute_force_knn;
    use std::cell::Cell;

    fn random_store(n: usize, dim: usize, seed: u64) -> VectorStore {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        VectorStore::new(dim, (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn small_params() -> HnswParams {
        HnswParams {
            m: 8,
            ef_construction: 64,
            seed: 7,
        }
    }

    #[test]
    fn single_point_graph() {
        let base = VectorStore::from_rows(&[[1.0f32, 2.0]]).unwrap();
        let g = HnswGraph::build(&base, small_params()).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.entry_point(), 0);
        let (res, stats) = g.search_fixed(&base, &[0.0, 0.0], 1, 1).unwrap();
        assert_eq!(res[0].id, 0);
        assert_eq!(stats.ndis, 1);
    }

    #[test]
    fn rejects_bad_params() {
        let base = random_store(10, 2, 0);
        assert!(HnswGraph::build(&base, HnswParams { m: 1, ..small_params() }).is_err());
        assert!(HnswGraph::build(&VectorStore::empty(2).unwrap(), small_params()).is_err());
        let g = HnswGraph::build(&base, small_params()).unwrap();
        assert!(g.search_fixed(&base, base.row(0), 5, 4).is_err());
        assert!(g.label_min_ndis(&base, base.row(0), 10, None).is_err());
    }

    #[test]
    fn build_is_deterministic_and_valid() {
        let base = random_store(2000, 8, 1);
        let a = HnswGraph::build(&base, small_params()).unwrap();
        let b = HnswGraph::build(&base, small_params()).unwrap();
        assert_eq!(a, b);
        a.audit().unwrap();
        let bytes = a.to_bytes();
        let back = HnswGraph::from_bytes(&bytes, Path::new("<mem>")).unwrap();
        assert_eq!(back, a);
        assert!(HnswGraph::from_bytes(&bytes[..bytes.len() - 2], Path::new("<mem>")).is_err());
    }

    #[test]
    fn exact_match_at_distance_zero() {
        let base = random_store(1000, 8, 2);
        let g = HnswGraph::build(&base, small_params()).unwrap();
        for id in [0usize, 17, 512, 999] {
            let (res, _) = g.search_fixed(&base, base.row(id), 1, 64).unwrap();
            assert_eq!(res[0], Neighbor { id, dist: 0.0 });
        }
    }

    #[test]
    fn saturated_search_is_exact() {
        let base = random_store(500, 6, 3);
        let g = HnswGraph::build(&base, small_params()).unwrap();
        let queries = random_store(50, 6, 4);
        for q in queries.rows() {
            let truth = brute_force_knn(&base, q, 1).unwrap();
            let (res, _) = g.search_fixed(&base, q, 1, base.len()).unwrap();
            assert_eq!(res[0].id, truth[0].id);
        }
    }

    #[test]
    fn stats_count_every_distance_call() {
        let base = random_store(1500, 8, 5);
        let g = HnswGraph::build(&base, small_params()).unwrap();
        let q = random_store(1, 8, 6);
        let calls = Cell::new(0usize);
        let counted = |v: u32| {
            calls.set(calls.get() + 1);
            l2_sq(q.row(0), base.row(v as usize))
        };
        let (_, stats) = g.search_fixed_with(counted, 10, 40).unwrap();
        assert_eq!(stats.ndis, calls.get());
        assert!(stats.ndis >= stats.hops);
        calls.set(0);
        let counted = |v: u32| {
            calls.set(calls.get() + 1);
            l2_sq(q.row(0), base.row(v as usize))
        };
        let (_, stats) = g.search_adaptive_with(counted, 1, SearchBudget::MaxNdis(300)).unwrap();
        assert_eq!(stats.ndis, calls.get());
    }

    #[test]
    fn unbounded_adaptive_equals_saturated_fixed() {
        let base = random_store(800, 8, 7);
        let g = HnswGraph::build(&base, small_params()).unwrap();
        for q in random_store(20, 8, 8).rows() {
            let a = g.search_adaptive(&base, q, 5, SearchBudget::Unbounded).unwrap();
            let f = g.search_fixed(&base, q, 5, g.len()).unwrap();
            assert_eq!(a, f);
        }
    }

    #[test]
    fn budget_one_stops_after_first_expansion() {
        let base = random_store(800, 8, 9);
        let g = HnswGraph::build(&base, small_params()).unwrap();
        let q = random_store(1, 8, 10);
        let (res, stats) = g.search_adaptive(&base, q.row(0), 3, SearchBudget::MaxNdis(1)).unwrap();
        assert!(!res.is_empty());
        assert_eq!(stats.hops, 1);
        assert!(g.search_adaptive(&base, q.row(0), 3, SearchBudget::MaxNdis(0)).is_err());
    }

    #[test]
    fn budget_overshoot_is_bounded_by_degree() {
        let base = random_store(2000, 8, 11);
        let g = HnswGraph::build(&base, small_params()).unwrap();
        let queries = random_store(40, 8, 12);
        for q in queries.rows() {
            // the upper-level descent always completes before the budget applies
            let descent = g.descent_ndis(q, &base);
            for budget in [1usize, 5, 20, 50, 100, 400, 1000] {
                let (_, stats) = g.search_adaptive(&base, q, 1, SearchBudget::MaxNdis(budget)).unwrap();
                assert!(
                    stats.ndis <= budget.max(descent) + g.max_degree(),
                    "budget {budget}: ndis {}",
                    stats.ndis
                );
            }
        }
    }

    impl HnswGraph {
        fn descent_ndis(&self, q: &[f32], base: &VectorStore) -> usize {
            let mut probe = Probe::new(|v: u32| l2_sq(q, base.row(v as usize)), None);
            let mut ep = Scored::new(probe.eval(self.entry), self.entry);
            for l in (1..=self.max_level).rev() {
                ep = self.greedy_closest(&mut probe, ep, l);
            }
            probe.ndis
        }
    }

    #[test]
    fn label_replays_under_its_budget() {
        let base = random_store(3000, 8, 13);
        let g = HnswGraph::build(&base, small_params()).unwrap();
        let queries = random_store(100, 8, 14);
        let mut reached = 0;
        for q in queries.rows() {
            let gt = brute_force_knn(&base, q, 1).unwrap()[0].id;
            if let MinNdis::Reached(label) = g.label_min_ndis(&base, q, gt, None).unwrap() {
                reached += 1;
                assert!(label >= 1);
                let (res, _) = g.search_adaptive(&base, q, 1, SearchBudget::MaxNdis(label)).unwrap();
                assert_eq!(res[0].id, gt);
            }
        }
        assert!(reached >= 95);
    }

    #[test]
    fn label_of_entry_vector() {
        let base = random_store(500, 4, 15);
        let g = HnswGraph::build(&base, small_params()).unwrap();
        let e = g.entry_point();
        assert_eq!(
            g.label_min_ndis(&base, base.row(e), e, None).unwrap(),
            MinNdis::Reached(1)
        );
    }

    #[test]
    fn disconnected_target_is_not_reached() {
        // build a graph, then sever every edge into node 5
        let base = random_store(300, 4, 16);
        let mut g = HnswGraph::build(&base, small_params()).unwrap();
        if g.entry_point() == 5 {
            return;
        }
        for per_level in g.links.iter_mut() {
            for list in per_level.iter_mut() {
                list.retain(|&v| v != 5);
            }
        }
        assert_eq!(
            g.label_min_ndis(&base, base.row(5), 5, None).unwrap(),
            MinNdis::NotReached
        );
    }

    #[test]
    fn recall_grows_with_ef() {
        let base = random_store(3000, 12, 17);
        let g = HnswGraph::build(&base, HnswParams { m: 4, ef_construction: 16, seed: 1 }).unwrap();
        let queries = random_store(200, 12, 18);
        let truth: Vec<usize> = queries.rows().map(|q| brute_force_knn(&base, q, 1).unwrap()[0].id).collect();
        let mut last = 0;
        for ef in [1usize, 2, 4, 8, 16, 32, 64, 128] {
            let hits = queries
                .rows()
                .zip(&truth)
                .filter(|(q, &t)| g.search_fixed(&base, q, 1, ef).unwrap().0[0].id == t)
                .count();
            assert!(hits >= last, "ef {ef}: {hits} < {last}");
            last = hits;
        }
    }
}
