use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ann-bench"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn ann-bench")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "ann-bench {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn make_data(dir: &Path) {
    // disjoint slices of one seeded stream
    for (name, count, skip) in [("base.fvecs", "1500", "0"), ("train.fvecs", "300", "1500"), ("query.fvecs", "100", "1800")] {
        ok(&["synth", "--out", &p(dir, name), "--count", count, "--skip", skip, "--dim", "16", "--clusters", "4"]);
    }
}

#[test]
fn end_to_end_graph_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    make_data(d);
    ok(&["ground-truth", "--base", &p(d, "base.fvecs"), "--queries", &p(d, "query.fvecs"), "--out", &p(d, "gt.ivecs"), "--depth", "60"]);
    assert!(d.join("gt.dist.fvecs").exists());

    ok(&["build", "--kind", "hnsw", "--base", &p(d, "base.fvecs"), "--out", &p(d, "g.hnsw"), "--m", "8", "--ef-construction", "40"]);
    ok(&[
        "label", "--kind", "hnsw", "--index", &p(d, "g.hnsw"), "--base", &p(d, "base.fvecs"),
        "--training", &p(d, "train.fvecs"), "--k-lid", "50", "--out", &p(d, "rows.txt"),
    ]);
    let rows = fs::read_to_string(d.join("rows.txt")).unwrap();
    assert!(rows.starts_with("# cost=ndis\nid lid_true min_cost target\n"));

    let train_out = ok(&[
        "train", "--training", &p(d, "train.fvecs"), "--rows", &p(d, "rows.txt"), "--out", &p(d, "policy.bin"),
        "--vo-out", &p(d, "vo.bin"), "--stage1-epochs", "3", "--stage2-epochs", "3", "--vo-epochs", "3",
    ]);
    assert!(train_out.contains("stage 1"));
    assert!(train_out.contains("thresh = "));

    let tuned = ok(&[
        "tune", "--kind", "hnsw", "--index", &p(d, "g.hnsw"), "--base", &p(d, "base.fvecs"),
        "--queries", &p(d, "query.fvecs"), "--gt", &p(d, "gt.ivecs"), "--target", "0.9",
    ]);
    assert!(tuned.starts_with("fixed parameter "));
    ok(&[
        "tune", "--kind", "hnsw", "--index", &p(d, "g.hnsw"), "--base", &p(d, "base.fvecs"),
        "--queries", &p(d, "query.fvecs"), "--gt", &p(d, "gt.ivecs"), "--target", "0.9",
        "--policy", &p(d, "policy.bin"), "--out", &p(d, "tuned.bin"),
    ]);
    assert!(d.join("tuned.bin").exists());

    let summary = ok(&[
        "bench", "--kind", "hnsw", "--index", &p(d, "g.hnsw"), "--base", &p(d, "base.fvecs"),
        "--queries", &p(d, "query.fvecs"), "--gt", &p(d, "gt.ivecs"), "--policy", &p(d, "policy.bin"),
        "--vo", &p(d, "vo.bin"), "--query-lid-k", "50", "--targets", "0.8,0.9", "--out-dir", &p(d, "out"),
        "--rows", &p(d, "rows.txt"),
    ]);
    assert!(summary.contains("recall target 0.9"));
    let csv = fs::read_to_string(d.join("out/bench.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,target,param,recall,mean_cost,reached,matched,latency_us,prediction_us");
    // four methods at two targets
    assert_eq!(lines.len(), 1 + 8);
    for m in ["fixed,", "tao,", "vo,", "real-lid,"] {
        assert!(lines.iter().any(|l| l.starts_with(m)), "missing {m}");
    }
    assert!(d.join("out/lid_histogram.txt").exists());

    let report = ok(&["report", "--rows", &p(d, "rows.txt")]);
    assert!(report.contains("spearman"));
    assert!(report.contains("lid_lo"));
}

#[test]
fn quantized_index_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    make_data(d);
    let conf = d.join("run.conf");
    fs::write(
        &conf,
        format!(
            "# shared settings\nbase = {}\nqueries = {}\nkind = ivf\nnlist = 16\npq_m = 4\nksub = 16\nkmeans-iters = 5\ndepth = 100\n",
            p(d, "base.fvecs"),
            p(d, "query.fvecs")
        ),
    )
    .unwrap();
    let c = conf.to_string_lossy().into_owned();
    ok(&["--config", &c, "ground-truth", "--out", &p(d, "gt.ivecs")]);
    ok(&["--config", &c, "build", "--out", &p(d, "ivf.bin")]);
    // command-line flags override the file
    let out = ok(&[
        "--config", &c, "tune", "--index", &p(d, "ivf.bin"), "--gt", &p(d, "gt.ivecs"), "--target", "0.5", "--kind", "ivf",
    ]);
    assert!(out.starts_with("fixed parameter "), "{out}");

    // id-only ground truth still works: distances are recomputed
    fs::remove_file(d.join("gt.dist.fvecs")).unwrap();
    let again = ok(&["--config", &c, "tune", "--index", &p(d, "ivf.bin"), "--gt", &p(d, "gt.ivecs"), "--target", "0.5"]);
    assert_eq!(again, out);

    fs::write(&conf, "not-a-flag = 3\n").unwrap();
    let bad = run(&["--config", &c, "report", "--rows", "x"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown config key"));
}

#[test]
fn reports_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("x.fvecs"), [1u8, 2, 3]).unwrap();
    let out = run(&["lid", "--base", &p(d, "x.fvecs"), "--queries", &p(d, "x.fvecs")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("x.fvecs"));

    let out = run(&["lid", "--base", &p(d, "x.dat"), "--queries", &p(d, "x.dat")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--format"));
}
