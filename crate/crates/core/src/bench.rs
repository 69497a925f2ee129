//! Matched-recall benchmarking: recall scoring, parameter and multiplier
//! tuning, per-method measurement, and report formatting.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::hnsw::{HnswGraph, SearchBudget};
use crate::io::GroundTruthTable;
use crate::ivf::IvfPqIndex;
use crate::knn::Neighbor;
use crate::pipeline::{budget_for, CostKind, TerminationPolicy, VoModel};
use crate::store::VectorStore;

/// Whether a result list contains (one of) the exact nearest neighbors among
/// its first `depth` entries. Ground-truth entries tied with the top distance
/// all count.
pub fn recall_hit(results: &[Neighbor], gt_row: &[Neighbor], depth: usize) -> bool {
    let Some(best) = gt_row.first() else {
        return false;
    };
    let ties: Vec<usize> = gt_row
        .iter()
        .take_while(|n| n.dist == best.dist)
        .map(|n| n.id)
        .collect();
    results.iter().take(depth).any(|r| ties.contains(&r.id))
}

/// An index driven either by its fixed search parameter or by a per-query
/// budget in the same cost unit the termination models predict.
pub trait Searcher {
    fn cost_kind(&self) -> CostKind;

    /// Smallest valid fixed parameter for `k` results.
    fn min_param(&self, k: usize) -> usize;

    /// Largest useful fixed parameter (saturated search).
    fn max_param(&self) -> usize;

    /// Largest useful budget.
    fn max_budget(&self) -> usize;

    /// Returns results and cost.
    fn search_fixed(&self, query: &[f32], param: usize, k: usize) -> Result<(Vec<Neighbor>, usize)>;

    fn search_budget(&self, query: &[f32], budget: usize, k: usize) -> Result<(Vec<Neighbor>, usize)>;
}

pub struct HnswSearcher<'a> {
    pub graph: &'a HnswGraph,
    pub base: &'a VectorStore,
}

impl Searcher for HnswSearcher<'_> {
    fn cost_kind(&self) -> CostKind {
        CostKind::DistanceEvaluations
    }

    fn min_param(&self, k: usize) -> usize {
        k
    }

    fn max_param(&self) -> usize {
        self.graph.len()
    }

    fn max_budget(&self) -> usize {
        usize::MAX
    }

    fn search_fixed(&self, query: &[f32], ef: usize, k: usize) -> Result<(Vec<Neighbor>, usize)> {
        let (res, stats) = self.graph.search_fixed(self.base, query, k, ef)?;
        Ok((res, stats.ndis))
    }

    fn search_budget(&self, query: &[f32], budget: usize, k: usize) -> Result<(Vec<Neighbor>, usize)> {
        let (res, stats) = self
            .graph
            .search_adaptive(self.base, query, k, SearchBudget::max_ndis(budget)?)?;
        Ok((res, stats.ndis))
    }
}

pub struct IvfSearcher<'a> {
    pub index: &'a IvfPqIndex,
}

impl Searcher for IvfSearcher<'_> {
    fn cost_kind(&self) -> CostKind {
        CostKind::Nprobe
    }

    fn min_param(&self, _k: usize) -> usize {
        1
    }

    fn max_param(&self) -> usize {
        self.index.nlist()
    }

    fn max_budget(&self) -> usize {
        self.index.nlist()
    }

    fn search_fixed(&self, query: &[f32], nprobe: usize, k: usize) -> Result<(Vec<Neighbor>, usize)> {
        let (res, stats) = self.index.search(query, nprobe, k)?;
        Ok((res, stats.clusters_probed))
    }

    fn search_budget(&self, query: &[f32], nprobe: usize, k: usize) -> Result<(Vec<Neighbor>, usize)> {
        self.search_fixed(query, nprobe.min(self.index.nlist()), k)
    }
}

/// Mean recall and cost of one configuration over a query set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub recall: f64,
    pub mean_cost: f64,
}

/// Outcome of a tuning search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuned<P> {
    pub param: P,
    pub measurement: Measurement,
    /// `false` when even the largest setting misses the target; `param` is
    /// then that largest setting.
    pub reached: bool,
}

fn check_queries(queries: &VectorStore, gt: &GroundTruthTable) -> Result<()> {
    if queries.is_empty() || queries.len() != gt.len() {
        return Err(Error::usage(format!(
            "{} queries but {} ground-truth rows",
            queries.len(),
            gt.len()
        )));
    }
    Ok(())
}

fn check_target(target: f64, tol: f64) -> Result<()> {
    if !(target > 0.0 && target <= 1.0) || !(tol >= 0.0) {
        return Err(Error::usage(format!("recall target {target} must be in (0, 1]")));
    }
    Ok(())
}

/// Runs every query with fixed parameter `param`.
pub fn measure_fixed(
    searcher: &dyn Searcher,
    queries: &VectorStore,
    gt: &GroundTruthTable,
    param: usize,
    k: usize,
) -> Result<Measurement> {
    check_queries(queries, gt)?;
    let (mut hits, mut cost) = (0usize, 0usize);
    for (q, row) in queries.rows().zip(gt.rows()) {
        let (res, c) = searcher.search_fixed(q, param, k)?;
        hits += recall_hit(&res, row, k) as usize;
        cost += c;
    }
    let n = queries.len() as f64;
    Ok(Measurement {
        recall: hits as f64 / n,
        mean_cost: cost as f64 / n,
    })
}

/// Smallest fixed parameter whose recall reaches `target - tol`, found by
/// doubling then bisection. The result satisfies
/// `recall(p) >= target - tol` and, unless `p` is the minimum, `recall(p - 1) < target - tol`.
pub fn tune_fixed(
    searcher: &dyn Searcher,
    queries: &VectorStore,
    gt: &GroundTruthTable,
    k: usize,
    target: f64,
    tol: f64,
) -> Result<Tuned<usize>> {
    check_target(target, tol)?;
    let goal = target - tol;
    let lo_param = searcher.min_param(k);
    let hi_param = searcher.max_param().max(lo_param);
    let mut memo: HashMap<usize, Measurement> = HashMap::new();
    let mut eval = |p: usize| -> Result<Measurement> {
        if let Some(m) = memo.get(&p) {
            return Ok(*m);
        }
        let m = measure_fixed(searcher, queries, gt, p, k)?;
        log::debug!("fixed param {p}: recall {:.4} cost {:.1}", m.recall, m.mean_cost);
        memo.insert(p, m);
        Ok(m)
    };

    let first = eval(lo_param)?;
    if first.recall >= goal {
        return Ok(Tuned {
            param: lo_param,
            measurement: first,
            reached: true,
        });
    }
    // invariant: recall(fail) < goal
    let mut fail = lo_param;
    let mut step = 1usize;
    let pass = loop {
        let p = fail.saturating_add(step).min(hi_param);
        let m = eval(p)?;
        if m.recall >= goal {
            break p;
        }
        if p == hi_param {
            return Ok(Tuned {
                param: hi_param,
                measurement: m,
                reached: false,
            });
        }
        fail = p;
        step = step.saturating_mul(2);
    };
    let mut pass = pass;
    while pass - fail > 1 {
        let mid = fail + (pass - fail) / 2;
        if eval(mid)?.recall >= goal {
            pass = mid;
        } else {
            fail = mid;
        }
    }
    Ok(Tuned {
        param: pass,
        measurement: eval(pass)?,
        reached: true,
    })
}

/// Per-query results at a given budget, memoized by budget.
struct BudgetRunner<'a> {
    searcher: &'a dyn Searcher,
    queries: &'a VectorStore,
    gt: &'a GroundTruthTable,
    k: usize,
    cache: Vec<HashMap<usize, (bool, usize)>>,
}

impl<'a> BudgetRunner<'a> {
    fn new(searcher: &'a dyn Searcher, queries: &'a VectorStore, gt: &'a GroundTruthTable, k: usize) -> Self {
        Self {
            searcher,
            queries,
            gt,
            k,
            cache: vec![HashMap::new(); queries.len()],
        }
    }

    fn run(&mut self, budgets: &[usize]) -> Result<Measurement> {
        let (mut hits, mut cost) = (0usize, 0usize);
        for (i, &b) in budgets.iter().enumerate() {
            let (hit, c) = match self.cache[i].get(&b) {
                Some(&v) => v,
                None => {
                    let (res, c) = self.searcher.search_budget(self.queries.row(i), b, self.k)?;
                    let v = (recall_hit(&res, self.gt.row(i), self.k), c);
                    self.cache[i].insert(b, v);
                    v
                }
            };
            hits += hit as usize;
            cost += c;
        }
        let n = budgets.len() as f64;
        Ok(Measurement {
            recall: hits as f64 / n,
            mean_cost: cost as f64 / n,
        })
    }
}

/// Bounds of the multiplier search, as powers of two.
pub const MULTIPLIER_LOG2_RANGE: (f64, f64) = (-10.0, 10.0);
pub const MULTIPLIER_ITERATIONS: usize = 40;

fn budgets(tcs: &[f64], multiplier: f64, thresh: usize, max_cost: usize) -> Vec<usize> {
    tcs.iter()
        .map(|&tc| budget_for(tc, multiplier, thresh, max_cost))
        .collect()
}

/// Smallest multiplier (log-scale bisection over `[2^-10, 2^10]`) whose
/// budgets reach mean recall `target - tol`, given each query's predicted
/// log2 cost `tcs`.
#[allow(clippy::too_many_arguments)]
pub fn tune_multiplier(
    searcher: &dyn Searcher,
    queries: &VectorStore,
    gt: &GroundTruthTable,
    k: usize,
    tcs: &[f64],
    thresh: usize,
    target: f64,
    tol: f64,
) -> Result<Tuned<f64>> {
    check_queries(queries, gt)?;
    let mut runner = BudgetRunner::new(searcher, queries, gt, k);
    tune_with_runner(&mut runner, tcs, thresh, target, tol)
}

/// Bisection on `log2(multiplier)`. The interval ends are only evaluated if
/// the search never moves away from them, which keeps the expensive saturated
/// end out of the common case without changing the result.
fn tune_with_runner(
    runner: &mut BudgetRunner<'_>,
    tcs: &[f64],
    thresh: usize,
    target: f64,
    tol: f64,
) -> Result<Tuned<f64>> {
    check_target(target, tol)?;
    if tcs.len() != runner.queries.len() {
        return Err(Error::usage("one predicted cost per query is required"));
    }
    let goal = target - tol;
    let max_cost = runner.searcher.max_budget();
    let (floor, ceiling) = MULTIPLIER_LOG2_RANGE;
    let (mut lo, mut hi) = (floor, ceiling);
    let mut best = None;
    for _ in 0..MULTIPLIER_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let m = runner.run(&budgets(tcs, mid.exp2(), thresh, max_cost))?;
        if m.recall >= goal {
            hi = mid;
            best = Some(m);
        } else {
            lo = mid;
        }
    }
    if lo == floor {
        let m = runner.run(&budgets(tcs, floor.exp2(), thresh, max_cost))?;
        if m.recall >= goal {
            return Ok(Tuned {
                param: floor.exp2(),
                measurement: m,
                reached: true,
            });
        }
    }
    let best = match best {
        Some(m) => m,
        None => {
            let m = runner.run(&budgets(tcs, ceiling.exp2(), thresh, max_cost))?;
            return Ok(Tuned {
                param: ceiling.exp2(),
                measurement: m,
                reached: m.recall >= goal,
            });
        }
    };
    Ok(Tuned {
        param: hi.exp2(),
        measurement: best,
        reached: true,
    })
}

/// Measurement of a tuned adaptive configuration.
pub fn measure_budgets(
    searcher: &dyn Searcher,
    queries: &VectorStore,
    gt: &GroundTruthTable,
    k: usize,
    tcs: &[f64],
    multiplier: f64,
    thresh: usize,
) -> Result<Measurement> {
    check_queries(queries, gt)?;
    BudgetRunner::new(searcher, queries, gt, k).run(&budgets(tcs, multiplier, thresh, searcher.max_budget()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Fixed,
    Tao,
    Vo,
    RealLid,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Fixed, Method::Tao, Method::Vo, Method::RealLid];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fixed => "fixed",
            Method::Tao => "tao",
            Method::Vo => "vo",
            Method::RealLid => "real-lid",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown method `{s}`")))
    }
}

/// One method at one recall target.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub target: f64,
    /// `efSearch` / `nprobe` for the fixed method, the multiplier otherwise.
    pub param: f64,
    pub recall: f64,
    pub mean_cost: f64,
    pub reached: bool,
    /// Achieved recall within `2 * tol` of the fixed row at the same target.
    pub matched: bool,
    /// Mean end-to-end wall-clock time per query, prediction included.
    pub latency_us: f64,
    /// Mean model inference time per query.
    pub prediction_us: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSettings {
    pub targets: Vec<f64>,
    pub tol: f64,
    /// Result depth `k` scored by recall: 1 for graphs, 100 for inverted files.
    pub k: usize,
    pub methods: Vec<Method>,
}

impl BenchSettings {
    pub fn for_cost(kind: CostKind) -> Self {
        Self {
            targets: vec![0.95, 0.99],
            tol: 0.001,
            k: match kind {
                CostKind::DistanceEvaluations => 1,
                CostKind::Nprobe => 100,
            },
            methods: Method::ALL.to_vec(),
        }
    }
}

/// Trained models available to a benchmark run.
#[derive(Default)]
pub struct Models<'a> {
    pub policy: Option<&'a TerminationPolicy>,
    pub vo: Option<&'a VoModel>,
    /// True LID of each query, for the real-LID ablation.
    pub query_lids: Option<&'a [f64]>,
}

struct AdaptiveMethod<'a> {
    method: Method,
    tcs: Vec<f64>,
    thresh: usize,
    predict: Box<dyn Fn(usize, &[f32]) -> Result<f64> + 'a>,
}

fn adaptive_methods<'a>(
    settings: &BenchSettings,
    models: &Models<'a>,
    queries: &VectorStore,
) -> Result<Vec<AdaptiveMethod<'a>>> {
    let mut out = Vec::new();
    for &method in &settings.methods {
        let entry = match method {
            Method::Fixed => continue,
            Method::Tao => {
                let p = models
                    .policy
                    .ok_or_else(|| Error::usage("method tao needs a trained policy"))?;
                AdaptiveMethod {
                    method,
                    tcs: p.predict_tc_batch(queries)?,
                    thresh: p.rule.thresh,
                    predict: Box::new(move |_, q| p.predict_tc(q)),
                }
            }
            Method::Vo => {
                let v = models
                    .vo
                    .ok_or_else(|| Error::usage("method vo needs a trained vector-only model"))?;
                AdaptiveMethod {
                    method,
                    tcs: v.predict_tc_batch(queries)?,
                    thresh: v.rule.thresh,
                    predict: Box::new(move |_, q| v.predict_tc(q)),
                }
            }
            Method::RealLid => {
                let p = models
                    .policy
                    .ok_or_else(|| Error::usage("method real-lid needs a trained policy"))?;
                let lids = models
                    .query_lids
                    .ok_or_else(|| Error::usage("method real-lid needs query LID values"))?;
                if lids.len() != queries.len() {
                    return Err(Error::usage("one LID value per query is required"));
                }
                let tcs = lids
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| {
                        p.tc_from_lid(l)
                            .map_err(|e| Error::Prediction(format!("query {i}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                AdaptiveMethod {
                    method,
                    tcs,
                    thresh: p.rule.thresh,
                    predict: Box::new(move |i, _| p.tc_from_lid(lids[i])),
                }
            }
        };
        out.push(entry);
    }
    Ok(out)
}

/// Tunes and measures every requested method at every target.
pub fn run_benchmark(
    searcher: &dyn Searcher,
    queries: &VectorStore,
    gt: &GroundTruthTable,
    settings: &BenchSettings,
    models: &Models<'_>,
) -> Result<Vec<BenchRow>> {
    check_queries(queries, gt)?;
    if settings.k == 0 || settings.k > gt.depth() {
        return Err(Error::usage(format!(
            "recall depth {} must be in 1..={} (ground-truth depth)",
            settings.k,
            gt.depth()
        )));
    }
    for &t in &settings.targets {
        check_target(t, settings.tol)?;
    }
    let adaptive = adaptive_methods(settings, models, queries)?;
    let with_fixed = settings.methods.contains(&Method::Fixed);
    let k = settings.k;
    let n = queries.len() as f64;
    let mut rows = Vec::new();
    let mut runners: Vec<BudgetRunner> = adaptive
        .iter()
        .map(|_| BudgetRunner::new(searcher, queries, gt, k))
        .collect();

    for &target in &settings.targets {
        let mut fixed_recall = None;
        if with_fixed {
            let tuned = tune_fixed(searcher, queries, gt, k, target, settings.tol)?;
            let start = Instant::now();
            for q in queries.rows() {
                searcher.search_fixed(q, tuned.param, k)?;
            }
            let latency = start.elapsed().as_secs_f64() * 1e6 / n;
            fixed_recall = Some(tuned.measurement.recall);
            log::info!(
                "target {target}: fixed param {} recall {:.4} cost {:.1}",
                tuned.param,
                tuned.measurement.recall,
                tuned.measurement.mean_cost
            );
            rows.push(BenchRow {
                method: Method::Fixed,
                target,
                param: tuned.param as f64,
                recall: tuned.measurement.recall,
                mean_cost: tuned.measurement.mean_cost,
                reached: tuned.reached,
                matched: true,
                latency_us: latency,
                prediction_us: 0.0,
            });
        }
        for (m, runner) in adaptive.iter().zip(runners.iter_mut()) {
            let tuned = tune_with_runner(runner, &m.tcs, m.thresh, target, settings.tol)?;
            let (mut predict_s, mut total_s) = (0.0, 0.0);
            for (i, q) in queries.rows().enumerate() {
                let start = Instant::now();
                let tc = (m.predict)(i, q)?;
                let budget = budget_for(tc, tuned.param, m.thresh, searcher.max_budget());
                let predicted = start.elapsed().as_secs_f64();
                searcher.search_budget(q, budget, k)?;
                total_s += start.elapsed().as_secs_f64();
                predict_s += predicted;
            }
            log::info!(
                "target {target}: {} multiplier {:.5} recall {:.4} cost {:.1}",
                m.method.name(),
                tuned.param,
                tuned.measurement.recall,
                tuned.measurement.mean_cost
            );
            rows.push(BenchRow {
                method: m.method,
                target,
                param: tuned.param,
                recall: tuned.measurement.recall,
                mean_cost: tuned.measurement.mean_cost,
                reached: tuned.reached,
                matched: fixed_recall
                    .is_none_or(|f| (f - tuned.measurement.recall).abs() <= 2.0 * settings.tol + 1e-12),
                latency_us: total_s * 1e6 / n,
                prediction_us: predict_s * 1e6 / n,
            });
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "method,target,param,recall,mean_cost,reached,matched,latency_us,prediction_us";

/// Comma-separated rows. With `timing = false` the wall-clock columns are
/// left empty so the output is reproducible byte for byte.
pub fn rows_to_csv(rows: &[BenchRow], timing: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let (lat, pred) = if timing {
            (format!("{:.3}", r.latency_us), format!("{:.3}", r.prediction_us))
        } else {
            (String::new(), String::new())
        };
        let _ = writeln!(
            out,
            "{},{},{:?},{:.6},{:.6},{},{},{},{}",
            r.method.name(),
            r.target,
            r.param,
            r.recall,
            r.mean_cost,
            r.reached,
            r.matched,
            lat,
            pred
        );
    }
    out
}

/// Plain-text table per target with cost reductions relative to the fixed row.
pub fn summary_text(rows: &[BenchRow], cost_kind: CostKind) -> String {
    let mut out = String::new();
    let mut targets: Vec<f64> = rows.iter().map(|r| r.target).collect();
    targets.dedup();
    for t in targets {
        let group: Vec<&BenchRow> = rows.iter().filter(|r| r.target == t).collect();
        let fixed = group.iter().find(|r| r.method == Method::Fixed).map(|r| r.mean_cost);
        let _ = writeln!(out, "recall target {t}");
        let _ = writeln!(
            out,
            "  {:<9} {:>12} {:>8} {:>12} {:>9} {:>12} {:>10}  flags",
            "method",
            "param",
            "recall",
            format!("mean {cost_kind}"),
            "vs fixed",
            "latency us",
            "predict us"
        );
        for r in group {
            let delta = match fixed {
                Some(f) if f > 0.0 && r.method != Method::Fixed => {
                    format!("{:+.1}%", 100.0 * (r.mean_cost - f) / f)
                }
                _ => "-".into(),
            };
            let mut flags = Vec::new();
            if !r.reached {
                flags.push("unreached");
            }
            if !r.matched {
                flags.push("recall-mismatch");
            }
            let _ = writeln!(
                out,
                "  {:<9} {:>12.5} {:>8.4} {:>12.1} {:>9} {:>12.1} {:>10.2}  {}",
                r.method.name(),
                r.param,
                r.recall,
                r.mean_cost,
                delta,
                r.latency_us,
                r.prediction_us,
                flags.join(",")
            );
        }
    }
    out
}

/// One LID bin of the cost histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_cost: f64,
}

/// Mean cost per LID bin `[i * width, (i + 1) * width)`, non-empty bins only.
pub fn lid_cost_histogram(lids: &[f64], costs: &[f64], width: f64) -> Result<Vec<HistogramBin>> {
    if lids.len() != costs.len() || !(width > 0.0) {
        return Err(Error::usage("histogram needs paired values and a positive bin width"));
    }
    let mut bins: std::collections::BTreeMap<i64, (usize, f64)> = Default::default();
    for (&l, &c) in lids.iter().zip(costs) {
        if !l.is_finite() {
            continue;
        }
        let e = bins.entry((l / width).floor() as i64).or_default();
        e.0 += 1;
        e.1 += c;
    }
    Ok(bins
        .into_iter()
        .map(|(b, (count, sum))| HistogramBin {
            lo: b as f64 * width,
            hi: (b + 1) as f64 * width,
            count,
            mean_cost: sum / count as f64,
        })
        .collect())
}

pub fn histogram_text(bins: &[HistogramBin], cost_kind: CostKind) -> String {
    let mut out = format!("{:>8} {:>8} {:>8} {:>14}\n", "lid_lo", "lid_hi", "count", format!("mean {cost_kind}"));
    for b in bins {
        let _ = writeln!(out, "{:>8.1} {:>8.1} {:>8} {:>14.2}", b.lo, b.hi, b.count, b.mean_cost);
    }
    out
}

/// Bins whose whole range lies between the `(1 - mass) / 2` and
/// `(1 + mass) / 2` quantiles of `lids`.
pub fn central_bins(bins: &[HistogramBin], lids: &[f64], mass: f64) -> Vec<HistogramBin> {
    let mut sorted: Vec<f64> = lids.iter().copied().filter(|l| l.is_finite()).collect();
    if sorted.is_empty() {
        return Vec::new();
    }
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| sorted[((p * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1)];
    let (lo, hi) = (q((1.0 - mass) / 2.0), q((1.0 + mass) / 2.0));
    bins.iter()
        .filter(|b| b.lo >= lo && b.hi <= hi)
        .copied()
        .collect()
}

/// Ranks starting at 1; tied values share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}
