//! Learned early termination: labeling, the two-stage LID-then-cost model,
//! the budget rule `max(thresh, ceil(multiplier * 2^tc))`, and a single-net
//! vector-only baseline.
//!
//! Stage 1 maps a vector to its predicted LID; stage 2 maps that LID to `tc`,
//! the predicted log2 of the minimum search cost needed to reach the true
//! nearest neighbor. The cost is counted in distance evaluations for graph
//! indexes and in probed lists for inverted-file indexes.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hnsw::{HnswGraph, MinNdis};
use crate::io::{read_file, write_file, GroundTruthTable};
use crate::ivf::IvfPqIndex;
use crate::lid::lid_from_neighbor_distances;
use crate::mlp::{self, Mlp, MlpSpec, Standardizer, TrainConfig};
use crate::store::VectorStore;

pub const STAGE1_HIDDEN: [usize; 2] = [200, 200];
pub const STAGE2_HIDDEN: [usize; 2] = [10, 10];
pub const VO_HIDDEN: [usize; 5] = [200, 200, 1, 10, 10];

const POLICY_MAGIC: &[u8; 8] = b"TERMPv01";
const VO_MAGIC: &[u8; 8] = b"VOMODv01";

/// Unit of search cost controlled by a budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostKind {
    /// Distance evaluations in a graph search.
    DistanceEvaluations,
    /// Inverted lists probed.
    Nprobe,
}

impl CostKind {
    fn tag(self) -> u8 {
        match self {
            CostKind::DistanceEvaluations => 0,
            CostKind::Nprobe => 1,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(CostKind::DistanceEvaluations),
            1 => Some(CostKind::Nprobe),
            _ => None,
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostKind::DistanceEvaluations => "ndis",
            CostKind::Nprobe => "nprobe",
        })
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ndis" => Ok(CostKind::DistanceEvaluations),
            "nprobe" => Ok(CostKind::Nprobe),
            other => Err(Error::usage(format!("unknown cost kind `{other}`"))),
        }
    }
}

/// An index that can report the smallest search cost reaching a given id.
pub trait CostLabeler {
    fn cost_kind(&self) -> CostKind;

    /// `None` when the target is never reached.
    fn min_cost(&self, base: &VectorStore, query: &[f32], gt_id: usize) -> Result<Option<usize>>;

    /// Largest meaningful budget (`nlist` for inverted files).
    fn max_cost(&self) -> usize;
}

impl CostLabeler for HnswGraph {
    fn cost_kind(&self) -> CostKind {
        CostKind::DistanceEvaluations
    }

    fn min_cost(&self, base: &VectorStore, query: &[f32], gt_id: usize) -> Result<Option<usize>> {
        Ok(match self.label_min_ndis(base, query, gt_id, None)? {
            MinNdis::Reached(n) => Some(n),
            MinNdis::NotReached => None,
        })
    }

    fn max_cost(&self) -> usize {
        usize::MAX
    }
}

impl CostLabeler for IvfPqIndex {
    fn cost_kind(&self) -> CostKind {
        CostKind::Nprobe
    }

    fn min_cost(&self, _base: &VectorStore, query: &[f32], gt_id: usize) -> Result<Option<usize>> {
        self.label_min_nprobe(query, gt_id).map(Some)
    }

    fn max_cost(&self) -> usize {
        self.nlist()
    }
}

/// One labeled training vector. `id` indexes the training store.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingRow {
    pub id: usize,
    pub lid_true: f64,
    pub min_cost: usize,
    pub target: f64,
}

impl TrainingRow {
    pub fn new(id: usize, lid_true: f64, min_cost: usize) -> Result<Self> {
        if min_cost == 0 {
            return Err(Error::usage("minimum cost must be at least 1"));
        }
        if !lid_true.is_finite() {
            return Err(Error::usage("LID must be finite"));
        }
        Ok(Self {
            id,
            lid_true,
            min_cost,
            target: (min_cost as f64).log2(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub rows: Vec<TrainingRow>,
    pub cost_kind: CostKind,
    /// Rows whose nearest neighbor the index never reached.
    pub dropped_unreached: usize,
    /// Rows whose neighbor distances gave no LID estimate.
    pub dropped_degenerate: usize,
}

impl TrainingSet {
    pub fn dropped(&self) -> usize {
        self.dropped_unreached + self.dropped_degenerate
    }

    /// Columnar text: a header line, then `id lid_true min_cost target`.
    pub fn to_text(&self) -> String {
        let mut out = format!("# cost={}\nid lid_true min_cost target\n", self.cost_kind);
        for r in &self.rows {
            out.push_str(&format!("{} {:?} {} {:?}\n", r.id, r.lid_true, r.min_cost, r.target));
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::format(path, format!("line {line}: {msg}"));
        let mut lines = text.lines().enumerate();
        let cost_kind = match lines.next() {
            Some((_, l)) => l
                .strip_prefix("# cost=")
                .ok_or_else(|| bad(1, "missing `# cost=` header"))?
                .parse()
                .map_err(|_| bad(1, "unknown cost kind"))?,
            None => return Err(bad(1, "empty file")),
        };
        lines.next();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.is_empty() {
                continue;
            }
            if f.len() != 4 {
                return Err(bad(i + 1, "expected 4 columns"));
            }
            let id = f[0].parse().map_err(|_| bad(i + 1, "bad id"))?;
            let lid: f64 = f[1].parse().map_err(|_| bad(i + 1, "bad lid_true"))?;
            let cost = f[2].parse().map_err(|_| bad(i + 1, "bad min_cost"))?;
            let row = TrainingRow::new(id, lid, cost).map_err(|e| bad(i + 1, &e.to_string()))?;
            rows.push(row);
        }
        Ok(Self {
            rows,
            cost_kind,
            dropped_unreached: 0,
            dropped_degenerate: 0,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

/// Labels every training vector with its true LID (from its `k_lid` nearest
/// base vectors) and the minimum cost the index needs to reach its exact
/// nearest neighbor.
pub fn generate_training_data(
    index: &dyn CostLabeler,
    base: &VectorStore,
    training: &VectorStore,
    k_lid: usize,
) -> Result<TrainingSet> {
    if k_lid < 2 || k_lid > base.len() {
        return Err(Error::usage(format!("k_lid = {k_lid} must be in 2..={}", base.len())));
    }
    let t = std::time::Instant::now();
    let neighbors = GroundTruthTable::compute(base, training, k_lid)?;
    log::info!("exact {k_lid}-NN of {} training vectors in {:.1?}", training.len(), t.elapsed());
    label_with_neighbors(index, base, training, &neighbors)
}

/// [`generate_training_data`] with precomputed exact neighbor lists (one row
/// per training vector, sorted, all of the LID depth), so several indexes can
/// share one exhaustive search.
pub fn label_with_neighbors(
    index: &dyn CostLabeler,
    base: &VectorStore,
    training: &VectorStore,
    neighbors: &GroundTruthTable,
) -> Result<TrainingSet> {
    if neighbors.len() != training.len() || neighbors.depth() < 2 {
        return Err(Error::usage(
            "need one neighbor list of depth >= 2 per training vector",
        ));
    }
    let mut set = TrainingSet {
        rows: Vec::with_capacity(training.len()),
        cost_kind: index.cost_kind(),
        dropped_unreached: 0,
        dropped_degenerate: 0,
    };
    for (id, (v, nn)) in training.rows().zip(neighbors.rows()).enumerate() {
        let dists: Vec<f64> = nn.iter().map(|n| n.dist).collect();
        let lid = match lid_from_neighbor_distances(&dists) {
            Ok(l) => l,
            Err(Error::DegenerateDistances(_)) => {
                set.dropped_degenerate += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        match index.min_cost(base, v, nn[0].id)? {
            Some(cost) => set.rows.push(TrainingRow::new(id, lid, cost)?),
            None => set.dropped_unreached += 1,
        }
    }
    if set.rows.is_empty() {
        return Err(Error::Pipeline(format!(
            "no usable training rows ({} unreached, {} degenerate)",
            set.dropped_unreached, set.dropped_degenerate
        )));
    }
    if set.dropped() > 0 {
        log::warn!(
            "dropped {} unreached and {} degenerate training rows",
            set.dropped_unreached,
            set.dropped_degenerate
        );
    }
    Ok(set)
}

/// Held-out regression quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionReport {
    pub count: usize,
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
}

impl RegressionReport {
    pub fn compute(predicted: &[f64], truth: &[f64]) -> Self {
        let n = truth.len().min(predicted.len());
        if n == 0 {
            return Self {
                count: 0,
                mae: 0.0,
                rmse: 0.0,
                r2: 0.0,
            };
        }
        let mean = truth[..n].iter().sum::<f64>() / n as f64;
        let (mut abs, mut sq, mut tot) = (0.0, 0.0, 0.0);
        for (p, t) in predicted.iter().zip(truth) {
            abs += (p - t).abs();
            sq += (p - t).powi(2);
            tot += (t - mean).powi(2);
        }
        Self {
            count: n,
            mae: abs / n as f64,
            rmse: (sq / n as f64).sqrt(),
            r2: if tot > 0.0 { 1.0 - sq / tot } else { 0.0 },
        }
    }
}

impl fmt::Display for RegressionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MAE {:.4}  RMSE {:.4}  R^2 {:.4}  (n = {})",
            self.mae, self.rmse, self.r2, self.count
        )
    }
}

/// Settings shared by the three trainable models.
#[derive(Debug, Clone, PartialEq)]
pub struct StageConfig {
    pub epochs: usize,
    /// `None` picks `clamp(rows / 50, 200, 1000)`, capped at the row count.
    pub batch_size: Option<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Share of rows held out for the quality report.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl StageConfig {
    pub fn stage1() -> Self {
        Self {
            epochs: 200,
            batch_size: None,
            learning_rate: 0.01,
            momentum: 0.9,
            holdout_fraction: 0.1,
            seed: 42,
        }
    }

    pub fn stage2() -> Self {
        Self {
            epochs: 20,
            ..Self::stage1()
        }
    }

    pub fn vo() -> Self {
        Self::stage1()
    }

    fn batch_for(&self, rows: usize) -> usize {
        self.batch_size
            .unwrap_or_else(|| (rows / 50).clamp(200, 1000))
            .min(rows)
            .max(1)
    }
}

/// An MLP behind an input standardizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Regressor {
    pub standardizer: Standardizer,
    pub mlp: Mlp,
}

impl Regressor {
    pub fn predict<T: crate::distance::Scalar>(&self, input: &[T]) -> Result<f64> {
        if input.len() != self.standardizer.dim() {
            return Err(Error::usage(format!(
                "model expects {} inputs, got {}",
                self.standardizer.dim(),
                input.len()
            )));
        }
        self.mlp.forward(&self.standardizer.apply(input))
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.write_u32::<LittleEndian>(self.standardizer.dim() as u32)
            .expect("vec write");
        for &v in self.standardizer.mean.iter().chain(&self.standardizer.std) {
            out.write_f64::<LittleEndian>(v).expect("vec write");
        }
        let weights = self.mlp.to_bytes();
        out.write_u64::<LittleEndian>(weights.len() as u64)
            .expect("vec write");
        out.extend_from_slice(&weights);
    }

    fn read(cur: &mut &[u8], path: &Path) -> Result<Self> {
        let bad = || Error::format(path, "truncated model bundle");
        let dim = cur.read_u32::<LittleEndian>().map_err(|_| bad())? as usize;
        if cur.len() < dim * 16 {
            return Err(bad());
        }
        let mut vals = Vec::with_capacity(2 * dim);
        for _ in 0..2 * dim {
            vals.push(cur.read_f64::<LittleEndian>().map_err(|_| bad())?);
        }
        let std = vals.split_off(dim);
        if std.iter().any(|s| !(s.is_finite() && *s > 0.0)) || vals.iter().any(|m| !m.is_finite()) {
            return Err(Error::format(path, "invalid standardization constants"));
        }
        let len = cur.read_u64::<LittleEndian>().map_err(|_| bad())? as usize;
        if cur.len() < len {
            return Err(bad());
        }
        let (weights, rest) = cur.split_at(len);
        let mlp = Mlp::from_bytes(weights, path)?;
        *cur = rest;
        if mlp.spec().input_size() != dim {
            return Err(Error::format(path, "standardizer and network disagree on input size"));
        }
        Ok(Self {
            standardizer: Standardizer { mean: vals, std },
            mlp,
        })
    }
}

/// Trains `inputs -> targets` with a seeded held-out split, returning the model
/// and its held-out report (computed on the training rows when the holdout is
/// empty).
pub fn train_regressor(
    inputs: &Array2<f64>,
    targets: &[f64],
    hidden: &[usize],
    config: &StageConfig,
) -> Result<(Regressor, RegressionReport)> {
    let n = inputs.nrows();
    if n < 2 || targets.len() != n {
        return Err(Error::usage("training needs at least 2 matching rows"));
    }
    if !(0.0..1.0).contains(&config.holdout_fraction) {
        return Err(Error::usage("holdout fraction must be in [0, 1)"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed ^ 0x401d_0u64));
    let held = ((n as f64 * config.holdout_fraction).round() as usize).min(n - 1);
    let (held_ids, train_ids) = order.split_at(held);
    let mut train_ids = train_ids.to_vec();
    train_ids.sort_unstable();
    let mut held_ids = held_ids.to_vec();
    held_ids.sort_unstable();

    let x_train = inputs.select(ndarray::Axis(0), &train_ids);
    let t_train: Vec<f64> = train_ids.iter().map(|&i| targets[i]).collect();
    let standardizer = Standardizer::fit(x_train.view());
    let xs = standardizer.apply_rows(x_train.view());
    let spec = MlpSpec::regressor(inputs.ncols(), hidden);
    let train_config = TrainConfig {
        epochs: config.epochs,
        batch_size: config.batch_for(train_ids.len()),
        learning_rate: config.learning_rate,
        momentum: config.momentum,
        seed: config.seed,
        normalize_targets: true,
    };
    let outcome = mlp::train(&spec, xs.view(), &t_train, &train_config)?;
    log::info!(
        "trained {:?} on {} rows, final loss {:.4e}",
        spec.layer_sizes,
        train_ids.len(),
        outcome.epoch_loss.last().copied().unwrap_or(f64::NAN)
    );
    let model = Regressor {
        standardizer,
        mlp: outcome.mlp,
    };
    let eval_ids = if held_ids.is_empty() { &train_ids } else { &held_ids };
    let predicted = eval_ids
        .iter()
        .map(|&i| model.predict(inputs.row(i).as_slice().expect("standard layout")))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<f64> = eval_ids.iter().map(|&i| targets[i]).collect();
    Ok((model, RegressionReport::compute(&predicted, &truth)))
}

fn vector_matrix(training: &VectorStore, rows: &[TrainingRow]) -> Result<Array2<f64>> {
    let dim = training.dim();
    let mut data = Vec::with_capacity(rows.len() * dim);
    for r in rows {
        if r.id >= training.len() {
            return Err(Error::usage(format!(
                "training row id {} out of range for {} vectors",
                r.id,
                training.len()
            )));
        }
        data.extend(training.row(r.id).iter().map(|&x| x as f64));
    }
    Ok(Array2::from_shape_vec((rows.len(), dim), data).expect("shape"))
}

/// Vector -> LID.
pub fn train_stage1(
    training: &VectorStore,
    rows: &[TrainingRow],
    config: &StageConfig,
) -> Result<(Regressor, RegressionReport)> {
    let x = vector_matrix(training, rows)?;
    let t: Vec<f64> = rows.iter().map(|r| r.lid_true).collect();
    train_regressor(&x, &t, &STAGE1_HIDDEN, config)
}

/// LID -> log2 minimum cost.
pub fn train_stage2(rows: &[TrainingRow], config: &StageConfig) -> Result<(Regressor, RegressionReport)> {
    let x = Array2::from_shape_fn((rows.len(), 1), |(i, _)| rows[i].lid_true);
    let t: Vec<f64> = rows.iter().map(|r| r.target).collect();
    train_regressor(&x, &t, &STAGE2_HIDDEN, config)
}

/// `max(thresh, ceil(multiplier * 2^tc))`, capped at `max_cost`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetRule {
    pub thresh: usize,
    pub multiplier: f64,
    pub max_cost: usize,
}

impl BudgetRule {
    pub fn new(thresh: usize, multiplier: f64, max_cost: usize) -> Result<Self> {
        if thresh == 0 || max_cost == 0 {
            return Err(Error::usage("thresh and the cost cap must be at least 1"));
        }
        if !(multiplier.is_finite() && multiplier > 0.0) {
            return Err(Error::usage("multiplier must be positive and finite"));
        }
        Ok(Self {
            thresh,
            multiplier,
            max_cost,
        })
    }

    pub fn budget(&self, tc: f64) -> usize {
        budget_for(tc, self.multiplier, self.thresh, self.max_cost)
    }
}

/// The budget rule with an explicit multiplier.
pub fn budget_for(tc: f64, multiplier: f64, thresh: usize, max_cost: usize) -> usize {
    let raw = (multiplier * tc.exp2()).ceil();
    // float -> int casts saturate, and the cap keeps huge values in range
    let scaled = if raw.is_nan() { usize::MAX } else { raw as usize };
    scaled.max(thresh).max(1).min(max_cost)
}

/// The `p`-th percentile (nearest rank) of the rows' minimum costs.
pub fn percentile_cost(rows: &[TrainingRow], p: f64) -> Result<usize> {
    if rows.is_empty() || !(0.0..=100.0).contains(&p) {
        return Err(Error::usage("percentile needs rows and p in [0, 100]"));
    }
    let mut costs: Vec<usize> = rows.iter().map(|r| r.min_cost).collect();
    costs.sort_unstable();
    let rank = ((p / 100.0 * costs.len() as f64).ceil() as usize).clamp(1, costs.len());
    Ok(costs[rank - 1])
}

/// Default budget floor: the 5th percentile of the training minimum costs.
pub fn default_thresh(rows: &[TrainingRow]) -> Result<usize> {
    percentile_cost(rows, 5.0)
}

fn check_finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Prediction(format!("{what} is {value}")))
    }
}

/// Two-stage termination model.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminationPolicy {
    pub stage1: Regressor,
    pub stage2: Regressor,
    pub rule: BudgetRule,
    pub cost_kind: CostKind,
}

impl TerminationPolicy {
    pub fn predict_lid(&self, query: &[f32]) -> Result<f64> {
        check_finite(self.stage1.predict(query)?, "predicted LID")
    }

    pub fn tc_from_lid(&self, lid: f64) -> Result<f64> {
        check_finite(lid, "input LID")?;
        check_finite(self.stage2.predict(&[lid])?, "predicted log2 cost")
    }

    pub fn predict_tc(&self, query: &[f32]) -> Result<f64> {
        self.tc_from_lid(self.predict_lid(query)?)
    }

    pub fn predict_budget(&self, query: &[f32]) -> Result<usize> {
        Ok(self.rule.budget(self.predict_tc(query)?))
    }

    /// `tc` for every query; errors name the failing query.
    pub fn predict_tc_batch(&self, queries: &VectorStore) -> Result<Vec<f64>> {
        batch(queries, |q| self.predict_tc(q))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = POLICY_MAGIC.to_vec();
        write_rule(&mut out, self.cost_kind, &self.rule);
        self.stage1.write(&mut out);
        self.stage2.write(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut cur = check_magic(bytes, POLICY_MAGIC, path)?;
        let (cost_kind, rule) = read_rule(&mut cur, path)?;
        let stage1 = Regressor::read(&mut cur, path)?;
        let stage2 = Regressor::read(&mut cur, path)?;
        if !cur.is_empty() {
            return Err(Error::format(path, "trailing bytes after policy"));
        }
        if stage2.standardizer.dim() != 1 {
            return Err(Error::format(path, "second stage must take one input"));
        }
        Ok(Self {
            stage1,
            stage2,
            rule,
            cost_kind,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?, path)
    }
}

/// Single network mapping a vector straight to `tc`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoModel {
    pub net: Regressor,
    pub rule: BudgetRule,
    pub cost_kind: CostKind,
}

impl VoModel {
    pub fn predict_tc(&self, query: &[f32]) -> Result<f64> {
        check_finite(self.net.predict(query)?, "predicted log2 cost")
    }

    pub fn predict_budget(&self, query: &[f32]) -> Result<usize> {
        Ok(self.rule.budget(self.predict_tc(query)?))
    }

    pub fn predict_tc_batch(&self, queries: &VectorStore) -> Result<Vec<f64>> {
        batch(queries, |q| self.predict_tc(q))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = VO_MAGIC.to_vec();
        write_rule(&mut out, self.cost_kind, &self.rule);
        self.net.write(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut cur = check_magic(bytes, VO_MAGIC, path)?;
        let (cost_kind, rule) = read_rule(&mut cur, path)?;
        let net = Regressor::read(&mut cur, path)?;
        if !cur.is_empty() {
            return Err(Error::format(path, "trailing bytes after model"));
        }
        if net.mlp.spec().hidden_sizes() != VO_HIDDEN {
            return Err(Error::format(path, "unexpected vector-only architecture"));
        }
        Ok(Self {
            net,
            rule,
            cost_kind,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?, path)
    }
}

/// Vector -> log2 minimum cost, with hidden sizes [`VO_HIDDEN`].
pub fn train_vo(
    training: &VectorStore,
    rows: &[TrainingRow],
    cost_kind: CostKind,
    rule: BudgetRule,
    config: &StageConfig,
) -> Result<(VoModel, RegressionReport)> {
    let x = vector_matrix(training, rows)?;
    let t: Vec<f64> = rows.iter().map(|r| r.target).collect();
    let (net, report) = train_regressor(&x, &t, &VO_HIDDEN, config)?;
    Ok((
        VoModel {
            net,
            rule,
            cost_kind,
        },
        report,
    ))
}

/// Everything needed to fit a [`TerminationPolicy`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub stage1: StageConfig,
    pub stage2: StageConfig,
    /// `None` uses [`default_thresh`].
    pub thresh: Option<usize>,
    pub multiplier: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            stage1: StageConfig::stage1(),
            stage2: StageConfig::stage2(),
            thresh: None,
            multiplier: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedPolicy {
    pub policy: TerminationPolicy,
    pub stage1_report: RegressionReport,
    pub stage2_report: RegressionReport,
}

/// Trains both stages on the same rows. The stages are fitted independently:
/// stage 2 learns from true LID values, not stage-1 predictions.
pub fn train_policy(
    training: &VectorStore,
    set: &TrainingSet,
    max_cost: usize,
    config: &PolicyConfig,
) -> Result<TrainedPolicy> {
    let (stage1, stage1_report) = train_stage1(training, &set.rows, &config.stage1)?;
    log::info!("stage 1 held-out: {stage1_report}");
    let (stage2, stage2_report) = train_stage2(&set.rows, &config.stage2)?;
    log::info!("stage 2 held-out: {stage2_report}");
    let thresh = match config.thresh {
        Some(t) => t,
        None => default_thresh(&set.rows)?,
    };
    Ok(TrainedPolicy {
        policy: TerminationPolicy {
            stage1,
            stage2,
            rule: BudgetRule::new(thresh, config.multiplier, max_cost)?,
            cost_kind: set.cost_kind,
        },
        stage1_report,
        stage2_report,
    })
}

fn batch(queries: &VectorStore, f: impl Fn(&[f32]) -> Result<f64>) -> Result<Vec<f64>> {
    queries
        .rows()
        .enumerate()
        .map(|(i, q)| {
            f(q).map_err(|e| match e {
                Error::Prediction(msg) => Error::Prediction(format!("query {i}: {msg}")),
                other => other,
            })
        })
        .collect()
}

fn write_rule(out: &mut Vec<u8>, kind: CostKind, rule: &BudgetRule) {
    out.push(kind.tag());
    out.write_u64::<LittleEndian>(rule.thresh as u64).expect("vec write");
    out.write_f64::<LittleEndian>(rule.multiplier).expect("vec write");
    out.write_u64::<LittleEndian>(rule.max_cost as u64).expect("vec write");
}

fn read_rule(cur: &mut &[u8], path: &Path) -> Result<(CostKind, BudgetRule)> {
    let bad = |msg: &str| Error::format(path, msg);
    let kind = cur.read_u8().map_err(|_| bad("truncated header"))?;
    let kind = CostKind::from_tag(kind).ok_or_else(|| bad("unknown cost kind"))?;
    let thresh = cur.read_u64::<LittleEndian>().map_err(|_| bad("truncated header"))?;
    let multiplier = cur.read_f64::<LittleEndian>().map_err(|_| bad("truncated header"))?;
    let max_cost = cur.read_u64::<LittleEndian>().map_err(|_| bad("truncated header"))?;
    let rule = BudgetRule::new(
        usize::try_from(thresh).map_err(|_| bad("thresh out of range"))?,
        multiplier,
        usize::try_from(max_cost).unwrap_or(usize::MAX),
    )
    .map_err(|e| bad(&e.to_string()))?;
    Ok((kind, rule))
}

fn check_magic<'a>(bytes: &'a [u8], magic: &[u8; 8], path: &Path) -> Result<&'a [u8]> {
    if bytes.len() < magic.len() || &bytes[..magic.len()] != magic {
        return Err(Error::format(path, "unrecognized model bundle"));
    }
    Ok(&bytes[magic.len()..])
}

/// Predictions of a one-input regressor on a grid, for spot checks.
pub fn sample_curve(model: &Regressor, grid: ArrayView1<f64>) -> Result<Vec<f64>> {
    grid.iter().map(|&x| model.predict(&[x])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hnsw::HnswParams;
    use crate::knn::brute_force_knn;
    use crate::lid::batch_lid;

    #[test]
    fn budget_formula() {
        assert_eq!(budget_for(3.0, 2.0, 10, usize::MAX), 16);
        assert_eq!(budget_for(1.0, 2.0, 10, usize::MAX), 10);
        assert_eq!(budget_for(12.0, 1.0, 1, 1024), 1024);
        assert_eq!(budget_for(5000.0, 1.0, 1, usize::MAX), usize::MAX);
        assert_eq!(budget_for(-5000.0, 1.0, 1, 100), 1);
        assert_eq!(budget_for(2.2, 1.0, 1, 100), 5);
    }

    #[test]
    fn budget_monotone_in_multiplier() {
        let mut last = 0;
        for i in -40..=40 {
            let b = budget_for(4.3, (i as f64 / 4.0).exp2(), 3, 10_000);
            assert!(b >= last);
            last = b;
        }
    }

    #[test]
    fn row_target_is_log2() {
        let r = TrainingRow::new(0, 5.0, 16).unwrap();
        assert_eq!(r.target, 4.0);
        assert!(TrainingRow::new(0, 5.0, 0).is_err());
    }

    #[test]
    fn percentile_nearest_rank() {
        let rows: Vec<TrainingRow> = (1..=100)
            .map(|c| TrainingRow::new(c, 1.0, c).unwrap())
            .collect();
        assert_eq!(percentile_cost(&rows, 5.0).unwrap(), 5);
        assert_eq!(percentile_cost(&rows, 100.0).unwrap(), 100);
        assert_eq!(percentile_cost(&rows, 0.0).unwrap(), 1);
    }

    #[test]
    fn rows_text_round_trip() {
        let set = TrainingSet {
            rows: vec![
                TrainingRow::new(3, 12.345678901234, 77).unwrap(),
                TrainingRow::new(9, 0.1, 1).unwrap(),
            ],
            cost_kind: CostKind::Nprobe,
            dropped_unreached: 0,
            dropped_degenerate: 0,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rows.txt");
        set.save(&p).unwrap();
        assert_eq!(TrainingSet::load(&p).unwrap(), set);
        assert!(TrainingSet::from_text("id lid\n1 2\n", &p).is_err());
    }

    #[test]
    fn report_by_hand() {
        let r = RegressionReport::compute(&[1.0, 2.0, 4.0], &[1.0, 3.0, 3.0]);
        assert!((r.mae - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.rmse - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        // total sum of squares around 7/3 is 8/3
        assert!((r.r2 - (1.0 - 2.0 / (8.0 / 3.0))).abs() < 1e-15);
    }

    fn small_world() -> (VectorStore, VectorStore, HnswGraph) {
        let all = crate::synth::ManifoldMixture {
            dim: 16,
            clusters: 4,
            hard_clusters: 0,
            max_intrinsic: 6,
            ..Default::default()
        }
        .generate(2200)
        .unwrap();
        let base = all.slice(0, 2000);
        let training = all.slice(2000, 2200);
        let graph = HnswGraph::build(
            &base,
            HnswParams {
                m: 8,
                ef_construction: 40,
                seed: 1,
            },
        )
        .unwrap();
        (base, training, graph)
    }

    #[test]
    fn training_data_matches_independent_oracles() {
        let (base, training, graph) = small_world();
        let set = generate_training_data(&graph, &base, &training, 100).unwrap();
        assert_eq!(set.rows.len() + set.dropped(), training.len());
        let lids = batch_lid(&training, &base, 100).unwrap();
        for r in &set.rows {
            assert_eq!(Some(r.lid_true), lids.values[r.id]);
            let gt = brute_force_knn(&base, training.row(r.id), 1).unwrap()[0].id;
            let expect = match graph.label_min_ndis(&base, training.row(r.id), gt, None).unwrap() {
                MinNdis::Reached(n) => n,
                MinNdis::NotReached => panic!("kept an unreached row"),
            };
            assert_eq!(r.min_cost, expect);
            assert_eq!(r.target, (expect as f64).log2());
        }
    }

    #[test]
    fn stage2_learns_identity_and_monotone_curves() {
        let rows: Vec<TrainingRow> = (0..400)
            .map(|i| {
                let lid = 2.0 + 10.0 * i as f64 / 399.0;
                let mut r = TrainingRow::new(i, lid, 1).unwrap();
                r.target = lid;
                r
            })
            .collect();
        let config = StageConfig {
            epochs: 200,
            holdout_fraction: 0.0,
            ..StageConfig::stage2()
        };
        let (model, report) = train_stage2(&rows, &config).unwrap();
        assert!(report.rmse.powi(2) < 1e-2, "{report}");
        let grid = ndarray::Array1::linspace(2.0, 12.0, 41);
        let curve = sample_curve(&model, grid.view()).unwrap();
        assert!(curve.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{curve:?}");
    }

    #[test]
    fn stage1_learns_a_constant() {
        let training = VectorStore::from_rows(
            &(0..300)
                .map(|i| vec![(i % 17) as f32, (i % 5) as f32, i as f32 / 30.0])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let rows: Vec<TrainingRow> = (0..300).map(|i| TrainingRow::new(i, 7.5, 3).unwrap()).collect();
        let config = StageConfig {
            epochs: 50,
            ..StageConfig::stage1()
        };
        let (_, report) = train_stage1(&training, &rows, &config).unwrap();
        assert!(report.mae < 1e-2, "{report}");
    }

    #[test]
    fn single_cluster_targets_predict_mean() {
        let rows: Vec<TrainingRow> = (0..200)
            .map(|i| TrainingRow::new(i, 5.0, if i % 2 == 0 { 8 } else { 32 }).unwrap())
            .collect();
        let (model, _) = train_stage2(&rows, &StageConfig::stage2()).unwrap();
        // all inputs identical: the MSE minimizer is the mean target, 4
        assert!((model.predict(&[5.0]).unwrap() - 4.0).abs() < 0.05);
    }

    #[test]
    fn policy_chain_and_bundle() {
        let (base, training, graph) = small_world();
        let set = generate_training_data(&graph, &base, &training, 100).unwrap();
        let config = PolicyConfig {
            stage1: StageConfig {
                epochs: 5,
                ..StageConfig::stage1()
            },
            stage2: StageConfig::stage2(),
            thresh: Some(7),
            multiplier: 1.5,
        };
        let trained = train_policy(&training, &set, graph.max_cost(), &config).unwrap();
        let policy = trained.policy;
        let q = training.row(5);
        let lid = policy.stage1.mlp.forward(&policy.stage1.standardizer.apply(q)).unwrap();
        let tc = policy.stage2.mlp.forward(&policy.stage2.standardizer.apply(&[lid])).unwrap();
        let manual = ((1.5 * tc.exp2()).ceil() as usize).max(7);
        assert_eq!(policy.predict_budget(q).unwrap(), manual);
        assert!(policy.predict_budget(q).unwrap() >= 7);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("policy.bin");
        policy.save(&p).unwrap();
        let back = TerminationPolicy::load(&p).unwrap();
        assert_eq!(back, policy);
        let bytes = policy.to_bytes();
        assert!(TerminationPolicy::from_bytes(&bytes[..bytes.len() - 1], &p).is_err());
        assert!(policy.predict_budget(&[0.0; 3]).is_err());
    }

    #[test]
    fn vo_architecture_and_bundle() {
        let (base, training, graph) = small_world();
        let set = generate_training_data(&graph, &base, &training, 100).unwrap();
        let rule = BudgetRule::new(4, 2.0, usize::MAX).unwrap();
        let config = StageConfig {
            epochs: 3,
            ..StageConfig::vo()
        };
        let (vo, _) = train_vo(&training, &set.rows, set.cost_kind, rule, &config).unwrap();
        assert_eq!(vo.net.mlp.spec().hidden_sizes(), &[200, 200, 1, 10, 10]);
        let tc = vo.predict_tc(training.row(0)).unwrap();
        assert_eq!(vo.predict_budget(training.row(0)).unwrap(), budget_for(tc, 2.0, 4, usize::MAX));
        let p = Path::new("vo.bin");
        assert_eq!(VoModel::from_bytes(&vo.to_bytes(), p).unwrap(), vo);
    }

    #[test]
    fn nprobe_budgets_clamp_to_nlist() {
        let rule = BudgetRule::new(1, 4.0, 64).unwrap();
        assert_eq!(rule.budget(10.0), 64);
    }
}
