//! `ann-bench`: ground truth, LID, index building, labeling, training,
//! tuning and matched-recall benchmarks over `.fvecs`/`.bvecs` datasets.
//!
//! Every flag can also come from `--config FILE` (`key = value` lines).

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use adaptive_ann::bench::{
    self, central_bins, histogram_text, lid_cost_histogram, rows_to_csv, spearman, summary_text,
    BenchSettings, HnswSearcher, IvfSearcher, Method, Models, Searcher,
};
use adaptive_ann::hnsw::{HnswGraph, HnswParams};
use adaptive_ann::io::{
    compute_and_save_ground_truth, read_vectors, write_vectors, GroundTruthTable, VectorFormat,
};
use adaptive_ann::ivf::{IvfParams, IvfPqIndex};
use adaptive_ann::lid::{batch_lid, lid_from_neighbor_distances};
use adaptive_ann::pipeline::{
    generate_training_data, train_policy, train_vo, CostKind, CostLabeler, PolicyConfig,
    StageConfig, TerminationPolicy, TrainingSet, VoModel,
};
use adaptive_ann::synth::ManifoldMixture;
use adaptive_ann::VectorStore;

#[derive(Parser)]
#[command(name = "ann-bench", version, about)]
struct Cli {
    /// Read additional flags from a `key = value` file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic descriptor-like dataset.
    Synth(SynthArgs),
    /// Exact k-NN ground truth (ids plus a distance sidecar).
    GroundTruth(GroundTruthArgs),
    /// Per-query LID estimates against a base set.
    Lid(LidArgs),
    /// Build and save an HNSW or IVF-PQ index.
    Build(BuildArgs),
    /// Label training vectors with true LID and minimum search cost.
    Label(LabelArgs),
    /// Train the termination policy (and optionally the vector-only model).
    Train(TrainArgs),
    /// Tune a fixed parameter or a model multiplier for one recall target.
    Tune(TuneArgs),
    /// Matched-recall benchmark over several targets and methods.
    Bench(BenchArgs),
    /// LID-vs-cost histogram and rank correlation of labeled rows.
    Report(ReportArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum IndexKind {
    Hnsw,
    Ivf,
}

impl IndexKind {
    fn cost_kind(self) -> CostKind {
        match self {
            IndexKind::Hnsw => CostKind::DistanceEvaluations,
            IndexKind::Ivf => CostKind::Nprobe,
        }
    }
}

#[derive(Args)]
struct VectorInput {
    /// Component encoding (f32, u8, i32); guessed from the extension if omitted.
    #[arg(long)]
    format: Option<String>,
    /// Use only the first N base vectors.
    #[arg(long, value_name = "N")]
    base_limit: Option<usize>,
}

impl VectorInput {
    fn read(&self, path: &Path) -> Result<VectorStore> {
        let format = match &self.format {
            Some(f) => f.parse()?,
            None => VectorFormat::from_path(path)
                .with_context(|| format!("cannot guess the format of {}; pass --format", path.display()))?,
        };
        let t = Instant::now();
        let store = read_vectors(path, format)?;
        log::info!(
            "read {} x {} from {} in {:.1?}",
            store.len(),
            store.dim(),
            path.display(),
            t.elapsed()
        );
        Ok(store)
    }

    fn read_base(&self, path: &Path) -> Result<VectorStore> {
        let base = self.read(path)?;
        Ok(match self.base_limit {
            Some(n) if n < base.len() => base.slice(0, n),
            _ => base,
        })
    }
}

#[derive(Args)]
#[command(args_override_self = true)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    count: usize,
    /// Drop the first N points of the stream, so disjoint splits can be
    /// written from one seed.
    #[arg(long, default_value_t = 0)]
    skip: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 128)]
    dim: usize,
    #[arg(long, default_value_t = 32)]
    clusters: usize,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct GroundTruthArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Output `.ivecs`; distances go to `<stem>.dist.fvecs` next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    depth: usize,
    #[command(flatten)]
    input: VectorInput,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct LidArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 1000)]
    k: usize,
    /// One value per line (`nan` for degenerate profiles).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    input: VectorInput,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct BuildArgs {
    #[arg(long, value_enum)]
    kind: IndexKind,
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// HNSW out-degree.
    #[arg(long, default_value_t = 16)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    ef_construction: usize,
    #[arg(long, default_value_t = 1024)]
    nlist: usize,
    /// PQ sub-quantizers.
    #[arg(long, default_value_t = 8)]
    pq_m: usize,
    #[arg(long, default_value_t = 256)]
    ksub: usize,
    /// k-means iterations for both quantizers.
    #[arg(long, default_value_t = 20)]
    kmeans_iters: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    input: VectorInput,
}

#[derive(Args)]
struct IndexInput {
    #[arg(long, value_enum)]
    kind: IndexKind,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    base: PathBuf,
}

enum LoadedIndex {
    Hnsw(HnswGraph),
    Ivf(IvfPqIndex),
}

impl LoadedIndex {
    fn load(input: &IndexInput, base: &VectorStore) -> Result<Self> {
        let loaded = match input.kind {
            IndexKind::Hnsw => {
                let g = HnswGraph::load(&input.index)?;
                ensure!(
                    g.len() == base.len() && g.dim() == base.dim(),
                    "graph has {} nodes of dimension {}, base has {} x {}",
                    g.len(),
                    g.dim(),
                    base.len(),
                    base.dim()
                );
                LoadedIndex::Hnsw(g)
            }
            IndexKind::Ivf => {
                let i = IvfPqIndex::load(&input.index)?;
                ensure!(
                    i.len() == base.len() && i.dim() == base.dim(),
                    "index holds {} vectors of dimension {}, base has {} x {}",
                    i.len(),
                    i.dim(),
                    base.len(),
                    base.dim()
                );
                LoadedIndex::Ivf(i)
            }
        };
        Ok(loaded)
    }

    fn labeler(&self) -> &dyn CostLabeler {
        match self {
            LoadedIndex::Hnsw(g) => g,
            LoadedIndex::Ivf(i) => i,
        }
    }

    fn searcher<'a>(&'a self, base: &'a VectorStore) -> Box<dyn Searcher + 'a> {
        match self {
            LoadedIndex::Hnsw(graph) => Box::new(HnswSearcher { graph, base }),
            LoadedIndex::Ivf(index) => Box::new(IvfSearcher { index }),
        }
    }
}

#[derive(Args)]
#[command(args_override_self = true)]
struct LabelArgs {
    #[command(flatten)]
    index: IndexInput,
    #[arg(long)]
    training: PathBuf,
    #[arg(long, default_value_t = 1000)]
    k_lid: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    input: VectorInput,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct TrainArgs {
    #[arg(long)]
    training: PathBuf,
    #[arg(long)]
    rows: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also train the vector-only baseline and save it here.
    #[arg(long)]
    vo_out: Option<PathBuf>,
    /// Budget floor; defaults to the 5th percentile of training costs.
    #[arg(long)]
    thresh: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    multiplier: f64,
    /// Upper clamp for budgets (set to nlist for IVF).
    #[arg(long)]
    max_cost: Option<usize>,
    #[arg(long, default_value_t = 200)]
    stage1_epochs: usize,
    #[arg(long, default_value_t = 20)]
    stage2_epochs: usize,
    #[arg(long, default_value_t = 200)]
    vo_epochs: usize,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    input: VectorInput,
}

#[derive(Args)]
struct EvalInput {
    #[arg(long)]
    queries: PathBuf,
    /// Ground-truth `.ivecs`; distances are recomputed if no sidecar exists.
    #[arg(long)]
    gt: PathBuf,
    /// Result depth scored by recall (default 1 for hnsw, 100 for ivf).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0.001)]
    tol: f64,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct TuneArgs {
    #[command(flatten)]
    index: IndexInput,
    #[command(flatten)]
    eval: EvalInput,
    #[arg(long, default_value_t = 0.99)]
    target: f64,
    /// Tune this policy's multiplier instead of the fixed parameter.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Where to write the tuned policy (defaults to overwriting --policy).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    input: VectorInput,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct BenchArgs {
    #[command(flatten)]
    index: IndexInput,
    #[command(flatten)]
    eval: EvalInput,
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    vo: Option<PathBuf>,
    /// Neighbors used for the queries' true LID (real-lid method).
    #[arg(long, default_value_t = 1000)]
    query_lid_k: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.95,0.99")]
    targets: Vec<f64>,
    /// Methods to run; defaults to every method whose model is available.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write a LID-vs-cost histogram of these labeled rows.
    #[arg(long)]
    rows: Option<PathBuf>,
    #[command(flatten)]
    input: VectorInput,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct ReportArgs {
    #[arg(long)]
    rows: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    bin_width: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args: Vec<String> = std::env::args().collect();
    if let Some(path) = config::take_config_flag(&mut args)? {
        args = expand_config(args, Path::new(&path))?;
    }
    let cli = Cli::from_arg_matches(&Cli::command().try_get_matches_from(args).unwrap_or_else(|e| e.exit()))?;
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::GroundTruth(a) => ground_truth(a),
        Command::Lid(a) => lid(a),
        Command::Build(a) => build(a),
        Command::Label(a) => label(a),
        Command::Train(a) => train(a),
        Command::Tune(a) => tune(a),
        Command::Bench(a) => run_bench(a),
        Command::Report(a) => report(a),
    }
}

/// Inserts config-file flags right after the subcommand name.
fn expand_config(mut args: Vec<String>, path: &Path) -> Result<Vec<String>> {
    let pairs = config::load(path)?;
    let cmd = Cli::command();
    let pos = args
        .iter()
        .position(|a| cmd.find_subcommand(a).is_some())
        .context("a subcommand is required")?;
    let sub = cmd.find_subcommand(&args[pos]).expect("found above");
    let longs = |c: &clap::Command| -> Vec<String> {
        c.get_arguments()
            .filter_map(|a| a.get_long().map(str::to_string))
            .collect()
    };
    let accepted = longs(sub);
    let known: Vec<String> = cmd.get_subcommands().flat_map(longs).collect();
    let flags = config::to_flags(
        &pairs,
        |k| accepted.iter().any(|a| a == k),
        |k| known.iter().any(|a| a == k),
    )?;
    args.splice(pos + 1..pos + 1, flags);
    Ok(args)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn synth(a: SynthArgs) -> Result<()> {
    let defaults = ManifoldMixture::default();
    let cfg = ManifoldMixture {
        dim: a.dim,
        clusters: a.clusters,
        seed: a.seed,
        max_intrinsic: defaults.max_intrinsic.min(a.dim),
        hard_min_intrinsic: defaults.hard_min_intrinsic.min(a.dim),
        hard_max_intrinsic: defaults.hard_max_intrinsic.min(a.dim),
        ..defaults
    };
    let all = cfg.generate(a.skip + a.count)?;
    let store = all.slice(a.skip, all.len());
    let format = VectorFormat::from_path(&a.out).unwrap_or(VectorFormat::F32);
    write_vectors(&store, &a.out, format)?;
    log::info!("wrote {} x {} to {}", store.len(), store.dim(), a.out.display());
    Ok(())
}

fn ground_truth(a: GroundTruthArgs) -> Result<()> {
    let base = a.input.read_base(&a.base)?;
    let queries = a.input.read(&a.queries)?;
    let t = Instant::now();
    compute_and_save_ground_truth(&base, &queries, a.depth, &a.out)?;
    log::info!("ground truth for {} queries in {:.1?}", queries.len(), t.elapsed());
    Ok(())
}

fn lid(a: LidArgs) -> Result<()> {
    let base = a.input.read_base(&a.base)?;
    let queries = a.input.read(&a.queries)?;
    let batch = batch_lid(&queries, &base, a.k)?;
    let mut values: Vec<f64> = batch.values.iter().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    if !values.is_empty() {
        let q = |p: f64| values[((values.len() - 1) as f64 * p).round() as usize];
        println!(
            "LID over {} queries (k = {}): min {:.3}  median {:.3}  max {:.3}  degenerate {}",
            values.len(),
            a.k,
            values[0],
            q(0.5),
            values[values.len() - 1],
            batch.failures
        );
    }
    if let Some(out) = a.out {
        let text: String = batch
            .values
            .iter()
            .map(|v| v.map_or_else(|| "nan\n".to_string(), |v| format!("{v:?}\n")))
            .collect();
        write_text(&out, &text)?;
    }
    Ok(())
}

fn build(a: BuildArgs) -> Result<()> {
    let base = a.input.read_base(&a.base)?;
    let t = Instant::now();
    match a.kind {
        IndexKind::Hnsw => {
            let g = HnswGraph::build(
                &base,
                HnswParams {
                    m: a.m,
                    ef_construction: a.ef_construction,
                    seed: a.seed,
                },
            )?;
            g.save(&a.out)?;
        }
        IndexKind::Ivf => {
            let params = IvfParams {
                nlist: a.nlist,
                m: a.pq_m,
                ksub: a.ksub,
                coarse_iters: a.kmeans_iters,
                pq_iters: a.kmeans_iters,
                seed: a.seed,
                ..IvfParams::default()
            };
            IvfPqIndex::build(&base, &params)?.save(&a.out)?;
        }
    }
    log::info!("built {:?} index in {:.1?} -> {}", a.kind, t.elapsed(), a.out.display());
    Ok(())
}

fn label(a: LabelArgs) -> Result<()> {
    let base = a.input.read_base(&a.index.base)?;
    let training = a.input.read(&a.training)?;
    let index = LoadedIndex::load(&a.index, &base)?;
    let t = Instant::now();
    let set = generate_training_data(index.labeler(), &base, &training, a.k_lid)?;
    log::info!(
        "labeled {} rows ({} unreached, {} degenerate) in {:.1?}",
        set.rows.len(),
        set.dropped_unreached,
        set.dropped_degenerate,
        t.elapsed()
    );
    set.save(&a.out)?;
    Ok(())
}

fn stage(epochs: usize, a: &TrainArgs) -> StageConfig {
    StageConfig {
        epochs,
        batch_size: a.batch_size,
        learning_rate: a.learning_rate,
        seed: a.seed,
        ..StageConfig::stage1()
    }
}

fn train(a: TrainArgs) -> Result<()> {
    let training = a.input.read(&a.training)?;
    let set = TrainingSet::load(&a.rows)?;
    let config = PolicyConfig {
        stage1: stage(a.stage1_epochs, &a),
        stage2: stage(a.stage2_epochs, &a),
        thresh: a.thresh,
        multiplier: a.multiplier,
    };
    let max_cost = a.max_cost.unwrap_or(usize::MAX);
    let trained = train_policy(&training, &set, max_cost, &config)?;
    println!("stage 1 (vector -> LID) held-out: {}", trained.stage1_report);
    println!("stage 2 (LID -> log2 cost) held-out: {}", trained.stage2_report);
    println!("thresh = {}", trained.policy.rule.thresh);
    trained.policy.save(&a.out)?;
    if let Some(vo_out) = &a.vo_out {
        let (vo, report) = train_vo(
            &training,
            &set.rows,
            set.cost_kind,
            trained.policy.rule,
            &stage(a.vo_epochs, &a),
        )?;
        println!("vector-only (vector -> log2 cost) held-out: {report}");
        vo.save(vo_out)?;
    }
    Ok(())
}

fn load_eval(
    index: &IndexInput,
    eval: &EvalInput,
    input: &VectorInput,
) -> Result<(VectorStore, VectorStore, GroundTruthTable, LoadedIndex, usize)> {
    let base = input.read_base(&index.base)?;
    let queries = input.read(&eval.queries)?;
    let gt = GroundTruthTable::load_auto(&eval.gt, &base, &queries)?;
    let loaded = LoadedIndex::load(index, &base)?;
    let k = eval.k.unwrap_or(match index.kind {
        IndexKind::Hnsw => 1,
        IndexKind::Ivf => 100,
    });
    ensure!(k <= gt.depth(), "--k {k} exceeds ground-truth depth {}", gt.depth());
    Ok((base, queries, gt, loaded, k))
}

fn tune(a: TuneArgs) -> Result<()> {
    let (base, queries, gt, index, k) = load_eval(&a.index, &a.eval, &a.input)?;
    let searcher = index.searcher(&base);
    match &a.policy {
        None => {
            let t = bench::tune_fixed(searcher.as_ref(), &queries, &gt, k, a.target, a.eval.tol)?;
            println!(
                "fixed parameter {}  recall {:.4}  mean {} {:.2}{}",
                t.param,
                t.measurement.recall,
                a.index.kind.cost_kind(),
                t.measurement.mean_cost,
                if t.reached { "" } else { "  (target not reached)" }
            );
        }
        Some(path) => {
            let mut policy = TerminationPolicy::load(path)?;
            ensure!(
                policy.cost_kind == a.index.kind.cost_kind(),
                "policy was trained for {} costs",
                policy.cost_kind
            );
            let tcs = policy.predict_tc_batch(&queries)?;
            let t = bench::tune_multiplier(
                searcher.as_ref(),
                &queries,
                &gt,
                k,
                &tcs,
                policy.rule.thresh,
                a.target,
                a.eval.tol,
            )?;
            println!(
                "multiplier {:.6}  recall {:.4}  mean {} {:.2}{}",
                t.param,
                t.measurement.recall,
                policy.cost_kind,
                t.measurement.mean_cost,
                if t.reached { "" } else { "  (target not reached)" }
            );
            policy.rule.multiplier = t.param;
            policy.save(a.out.as_deref().unwrap_or(path))?;
        }
    }
    Ok(())
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let (base, queries, gt, index, k) = load_eval(&a.index, &a.eval, &a.input)?;
    let cost_kind = a.index.kind.cost_kind();
    let policy = a.policy.as_deref().map(TerminationPolicy::load).transpose()?;
    let vo = a.vo.as_deref().map(VoModel::load).transpose()?;
    for (name, kind) in [
        ("policy", policy.as_ref().map(|p| p.cost_kind)),
        ("vector-only model", vo.as_ref().map(|v| v.cost_kind)),
    ] {
        if let Some(kind) = kind {
            ensure!(kind == cost_kind, "{name} was trained for {kind} costs, index uses {cost_kind}");
        }
    }
    let methods: Vec<Method> = if a.methods.is_empty() {
        let mut m = vec![Method::Fixed];
        if policy.is_some() {
            m.push(Method::Tao);
        }
        if vo.is_some() {
            m.push(Method::Vo);
        }
        if policy.is_some() && a.query_lid_k >= 2 {
            m.push(Method::RealLid);
        }
        m
    } else {
        a.methods.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
    };
    if methods.contains(&Method::RealLid) && a.query_lid_k < 2 {
        bail!("method real-lid needs --query-lid-k >= 2");
    }
    let query_lids: Option<Vec<f64>> = if methods.contains(&Method::RealLid) {
        let t = Instant::now();
        let lids = if gt.depth() >= a.query_lid_k {
            gt.rows()
                .iter()
                .map(|r| {
                    let d: Vec<f64> = r[..a.query_lid_k].iter().map(|n| n.dist).collect();
                    lid_from_neighbor_distances(&d)
                })
                .collect::<Result<Vec<_>, _>>()?
        } else {
            let batch = batch_lid(&queries, &base, a.query_lid_k)?;
            ensure!(batch.failures == 0, "{} queries have degenerate LID profiles", batch.failures);
            batch.values.into_iter().flatten().collect()
        };
        log::info!("query LID values in {:.1?}", t.elapsed());
        Some(lids)
    } else {
        None
    };
    let settings = BenchSettings {
        targets: a.targets.clone(),
        tol: a.eval.tol,
        k,
        methods,
    };
    let models = Models {
        policy: policy.as_ref(),
        vo: vo.as_ref(),
        query_lids: query_lids.as_deref(),
    };
    let searcher = index.searcher(&base);
    let rows = bench::run_benchmark(searcher.as_ref(), &queries, &gt, &settings, &models)?;
    let summary = summary_text(&rows, cost_kind);
    print!("{summary}");
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    write_text(&a.out_dir.join("bench.csv"), &rows_to_csv(&rows, true))?;
    write_text(&a.out_dir.join("summary.txt"), &summary)?;
    if let Some(rows_path) = &a.rows {
        let text = histogram_report(&TrainingSet::load(rows_path)?, 2.0)?;
        write_text(&a.out_dir.join("lid_histogram.txt"), &text)?;
    }
    Ok(())
}

fn histogram_report(set: &TrainingSet, width: f64) -> Result<String> {
    let lids: Vec<f64> = set.rows.iter().map(|r| r.lid_true).collect();
    let costs: Vec<f64> = set.rows.iter().map(|r| r.min_cost as f64).collect();
    let bins = lid_cost_histogram(&lids, &costs, width)?;
    let central = central_bins(&bins, &lids, 0.8);
    let monotone = central.windows(2).all(|w| w[1].mean_cost >= w[0].mean_cost);
    Ok(format!(
        "rows {}\nspearman(lid, min {}) {:.4}\ncentral-80% bins non-decreasing: {}\n\n{}",
        set.rows.len(),
        set.cost_kind,
        spearman(&lids, &costs),
        monotone,
        histogram_text(&bins, set.cost_kind)
    ))
}

fn report(a: ReportArgs) -> Result<()> {
    let text = histogram_report(&TrainingSet::load(&a.rows)?, a.bin_width)?;
    print!("{text}");
    if let Some(out) = a.out {
        write_text(&out, &text)?;
    }
    Ok(())
}
