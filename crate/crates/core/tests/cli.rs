use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_review-rating")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    out
}

struct Fixture {
    dir: TempDir,
    data: String,
}

impl Fixture {
    fn new() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("synth");
        ok(&["synth", "--out", out.to_str().unwrap(), "--num-domains", "2", "--reviews", "60", "--seed", "3"]);
        let data = out.join("corpus.jsonl").to_str().unwrap().to_string();
        Fixture { dir, data }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }
}

fn csv_header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_2_and_name_the_key() {
    let f = Fixture::new();
    let out = run(&["experiment", "--out", &f.arg("x")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("`data`"), "{}", stderr(&out));

    let out = run(&["experiment", "--data", &f.data, "--folds", "1", "--out", &f.arg("x")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("`folds`"), "{}", stderr(&out));

    let out = run(&["experiment", "--data", &f.data, "--set", "embedding.dimm=3", "--out", &f.arg("x")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("dimm"), "{}", stderr(&out));

    assert_eq!(code(&run(&["no-such-command"])), 2);
    assert_eq!(code(&run(&["stats", "--data", &f.arg("missing.jsonl")])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn data_errors_exit_3() {
    let f = Fixture::new();
    let bad = f.path("bad.jsonl");
    let good = std::fs::read_to_string(&f.data).unwrap();
    let first = good.lines().next().unwrap();
    std::fs::write(&bad, format!("{first}\nnot json\n")).unwrap();

    let out = ok(&["ingest", "--data", bad.to_str().unwrap(), "--out", &f.arg("lenient")]);
    assert!(out.status.success());
    let rejections = std::fs::read_to_string(f.path("lenient/rejections.csv")).unwrap();
    assert_eq!(rejections.lines().count(), 2, "{rejections}");
    let accepted = std::fs::read_to_string(f.path("lenient/reviews.jsonl")).unwrap();
    assert_eq!(accepted.lines().count(), 1);

    let out = run(&["ingest", "--strict", "--data", bad.to_str().unwrap(), "--out", &f.arg("strict")]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));

    let empty = f.path("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&run(&["stats", "--data", empty.to_str().unwrap()])), 3);
}

#[test]
fn config_layers_apply_in_order() {
    let f = Fixture::new();
    let file = f.path("run.toml");
    std::fs::write(&file, "folds = 4\ntop_k = 7\nseed = 9\n[embedding]\ndim = 30\nwindow = 3\n").unwrap();
    let out = ok(&[
        "config",
        "--config",
        file.to_str().unwrap(),
        "--set",
        "folds=5",
        "--set",
        "embedding.dim=40",
        "--seed",
        "11",
    ]);
    let resolved: toml::Table = String::from_utf8(out.stdout).unwrap().parse().unwrap();
    assert_eq!(resolved["folds"].as_integer(), Some(5));
    assert_eq!(resolved["top_k"].as_integer(), Some(7));
    assert_eq!(resolved["seed"].as_integer(), Some(11));
    let embedding = resolved["embedding"].as_table().unwrap();
    assert_eq!(embedding["dim"].as_integer(), Some(40));
    assert_eq!(embedding["window"].as_integer(), Some(3));
    assert_eq!(embedding["negatives"].as_integer(), Some(5));
    assert!(!embedding.contains_key("seed"));
}

#[test]
fn defaults_are_stable() {
    let out = ok(&["config"]);
    let resolved: toml::Table = String::from_utf8(out.stdout).unwrap().parse().unwrap();
    let int = |t: &toml::Table, k: &str| t[k].as_integer().unwrap();
    assert_eq!(int(&resolved, "seed"), 1);
    assert_eq!(int(&resolved, "folds"), 10);
    assert_eq!(int(&resolved, "top_k"), 100);
    assert_eq!(int(&resolved, "top_phrases"), 10);
    assert_eq!(resolved["paper_leakage"].as_bool(), Some(false));
    let embedding = resolved["embedding"].as_table().unwrap();
    for (k, v) in [("dim", 100), ("window", 5), ("negatives", 5), ("min_count", 5), ("epochs", 5)] {
        assert_eq!(int(embedding, k), v, "embedding.{k}");
    }
    let mlr = resolved["mlr"].as_table().unwrap();
    assert_eq!(int(mlr, "epochs"), 20);
    assert_eq!(int(mlr, "batch_size"), 256);
}

#[test]
fn component_seeds_cannot_be_set_directly() {
    let out = run(&["config", "--set", "embedding.seed=4"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("embedding.seed"), "{}", stderr(&out));
}

#[test]
fn full_pipeline_writes_expected_outputs() {
    let f = Fixture::new();
    let before = std::fs::read(&f.data).unwrap();
    let small = ["--dim", "16", "--min-count", "2", "--embedding-epochs", "2"];

    ok(&["stats", "--data", &f.data, "--out", &f.arg("stats")]);
    assert_eq!(csv_header(&f.path("stats/star_distribution.csv")).split(',').next(), Some("domain"));

    ok(&["phrases", "--data", &f.data, "--out", &f.arg("phrases"), "--dump"]);
    assert!(f.path("phrases/salient_phrases.csv").exists());
    assert!(f.path("phrases/phrases.csv").exists());

    ok(&[&["train-embeddings", "--data", &f.data, "--out", &f.arg("emb")][..], &small[..]].concat());
    let losses = std::fs::read_to_string(f.path("emb/embedding_loss.csv")).unwrap();
    assert_eq!(losses.lines().next(), Some("epoch,loss"));
    assert_eq!(losses.lines().count(), 3);
    let vectors = f.arg("emb/embeddings.txt");

    ok(&["featurize", "--data", &f.data, "--scheme", "w2v_pape", "--embeddings", &vectors, "--out", &f.arg("feat")]);
    let header = csv_header(&f.path("feat/features.csv"));
    assert!(header.starts_with("review_id,domain,stars,f1"), "{header}");
    assert_eq!(header.split(',').count(), 3 + 3 * 16);

    ok(&["featurize", "--data", &f.data, "--scheme", "bl", "--top-k", "20", "--out", &f.arg("feat-bl")]);
    assert!(f.path("feat-bl/vocab.txt").exists());

    ok(&[&["train", "--data", &f.data, "--scheme", "w2v_ape", "--mlr-epochs", "5", "--out", &f.arg("model")][..], &small[..]].concat());
    for name in ["model.json", "embeddings.txt", "embedding_loss.csv", "manifest.json"] {
        assert!(f.path("model").join(name).exists(), "{name}");
    }

    ok(&["evaluate", "--data", &f.data, "--model", &f.arg("model/model.json"), "--out", &f.arg("eval")]);
    let metrics = std::fs::read_to_string(f.path("eval/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().next(), Some("domain,n,mae,rmse"));
    assert!(metrics.lines().any(|l| l.starts_with("all,120,")), "{metrics}");
    assert_eq!(std::fs::read_to_string(f.path("eval/predictions.csv")).unwrap().lines().count(), 121);

    assert_eq!(std::fs::read(&f.data).unwrap(), before);
}

#[test]
fn experiment_outputs_and_manifest() {
    let f = Fixture::new();
    let out_dir = f.path("exp");
    ok(&[
        "experiment",
        "--data",
        &f.data,
        "--out",
        out_dir.to_str().unwrap(),
        "--folds",
        "3",
        "--scheme",
        "bl,w2v",
        "--dim",
        "12",
        "--min-count",
        "2",
        "--seed",
        "5",
    ]);
    for name in ["fold_plan.csv", "folds.csv", "aggregate.csv", "bid.csv"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let aggregate = std::fs::read_to_string(out_dir.join("aggregate.csv")).unwrap();
    assert_eq!(aggregate.lines().count(), 1 + 2 * 2 * 2);

    let m = manifest(&out_dir);
    assert_eq!(m["command"], "experiment");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["folds"], 3);
    assert_eq!(m["components"]["tagger"], "bundled");
    assert!(m["sub_seeds"].is_object());
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().filter_map(|v| v.as_str()).collect();
    assert!(outputs.iter().any(|o| o.ends_with("aggregate.csv")), "{outputs:?}");
}

#[test]
fn refuses_to_overwrite_inputs() {
    let f = Fixture::new();
    let dir = f.path("in-place");
    std::fs::create_dir(&dir).unwrap();
    let input = dir.join("reviews.jsonl");
    std::fs::copy(&f.data, &input).unwrap();
    let before = std::fs::read(&input).unwrap();
    let out = run(&["ingest", "--data", input.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("`out`"), "{}", stderr(&out));
    assert_eq!(std::fs::read(&input).unwrap(), before);
}
