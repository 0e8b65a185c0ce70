use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_tempora");

fn tempora(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SPEC: &str = "k = 3\nv = 30\nnum_slices = 6\ndocs_per_slice = 8\ndoc_length = 15\nseed = 21\n";
const CONFIG: &str = "k = 3\nnum_slices = 6\nembed_dim = 16\nepochs = 30\n";

fn fixture(dir: &Path) {
    fs::write(dir.join("spec.txt"), SPEC).unwrap();
    fs::write(dir.join("run.cfg"), CONFIG).unwrap();
}

#[test]
fn no_arguments_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = tempora(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    let o = tempora(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    assert_eq!(tempora(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(tempora(dir.path(), &["train", "--corpus", "x"]).status.code(), Some(1));
}

#[test]
fn synth_train_evaluate_forecast_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    let o = tempora(d, &["synth", "--spec", "spec.txt", "--out", "corpus.jsonl", "--truth", "truth.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(d.join("corpus.jsonl")).unwrap().lines().count(), 48);
    let truth: serde_json::Value = serde_json::from_slice(&fs::read(d.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["theta"].as_array().unwrap().len(), 6);

    let o = tempora(d, &["train", "--corpus", "corpus.jsonl", "--config", "run.cfg", "--out", "model.ckpt"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(&fs::read(d.join("model.ckpt")).unwrap()[..16], b"TEMPORA-CKPT\0\0\0\0");

    let o = tempora(d, &["evaluate", "--corpus", "corpus.jsonl", "--ckpt", "model.ckpt", "--out", "report.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d.join("report.json")).unwrap()).unwrap();
    for key in ["perplexity", "diversity", "coherence", "stability", "per_topic_coherence", "top_words", "definitions"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["per_topic_coherence"].as_array().unwrap().len(), 3);
    let csv = fs::read_to_string(d.join("report.topics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let o = tempora(d, &["forecast", "--ckpt", "model.ckpt", "--steps", "4", "--out", "forecast.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("forecast.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("step,topic0,topic1,topic2"));
    for line in lines {
        let sum: f64 = line.split(',').skip(1).map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-5);
    }
}

#[test]
fn ingested_binary_corpus_trains_like_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    assert!(tempora(d, &["synth", "--spec", "spec.txt", "--out", "c.jsonl", "--truth", "t.json"]).status.success());
    let o = tempora(d, &["ingest", "c.jsonl", "--out", "c.bin"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for (input, out) in [("c.jsonl", "a.ckpt"), ("c.bin", "b.ckpt")] {
        let o = tempora(d, &["train", "--corpus", input, "--config", "run.cfg", "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(d.join("a.ckpt")).unwrap(), fs::read(d.join("b.ckpt")).unwrap());
}

#[test]
fn corrupt_checkpoint_is_a_runtime_error_naming_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    assert!(tempora(d, &["synth", "--spec", "spec.txt", "--out", "c.jsonl", "--truth", "t.json"]).status.success());
    fs::write(d.join("broken.ckpt"), b"NOT-A-CHECKPOINT-AT-ALL").unwrap();
    let o = tempora(d, &["evaluate", "--corpus", "c.jsonl", "--ckpt", "broken.ckpt", "--out", "r.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("broken.ckpt"), "{}", stderr(&o));
    assert!(stderr(&o).contains("bad magic"));
    assert!(!d.join("r.json").exists());
}

#[test]
fn config_problems_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    fs::write(d.join("bad.cfg"), "k = 3\nlearning_speed = 2\n").unwrap();
    assert!(tempora(d, &["synth", "--spec", "spec.txt", "--out", "c.jsonl", "--truth", "t.json"]).status.success());
    let o = tempora(d, &["train", "--corpus", "c.jsonl", "--config", "bad.cfg", "--out", "m.ckpt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("learning_speed"));
    let o = tempora(d, &["train", "--corpus", "missing.jsonl", "--config", "run.cfg", "--out", "m.ckpt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.jsonl"));
}

#[test]
fn seed_flag_changes_generated_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    for (seed, out) in [("1", "a.jsonl"), ("2", "b.jsonl"), ("1", "c.jsonl")] {
        let o = tempora(d, &["synth", "--spec", "spec.txt", "--out", out, "--truth", "t.json", "--seed", seed]);
        assert!(o.status.success());
    }
    let read = |f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(read("a.jsonl"), read("c.jsonl"));
    assert_ne!(read("a.jsonl"), read("b.jsonl"));
}

#[test]
fn sweep_subcommands_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    let o = tempora(d, &["sweep-dim", "--values", "8", "--out", "dim.csv", "--spec", "spec.txt", "--config", "run.cfg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("dim.csv")).unwrap();
    assert_eq!(csv.lines().collect::<Vec<_>>().len(), 2);
    assert!(csv.starts_with("embed_dim,coherence,diversity\n8,"));

    let o = tempora(d, &["sweep-seqlen", "--values", "4,5", "--out", "len.csv", "--spec", "spec.txt", "--config", "run.cfg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("len.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "num_slices,perplexity,diversity,coherence,stability");
    assert!(lines[1].starts_with("4,") && lines[2].starts_with("5,"));

    let o = tempora(d, &["sweep-dim", "--values", "", "--out", "x.csv"]);
    assert_ne!(o.status.code(), Some(0));
}
