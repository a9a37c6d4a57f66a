use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sailx::manifest::RunManifest;

fn sailx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sailx")).args(args).env_remove("SAILX_SEED").output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

const TINY: &str = r#"{
  "embed_dim": 8, "enc_hidden": 8, "attn_hidden": 8, "filter_width": 3, "channels": 4,
  "extra_convs": [{"kh": 3, "kw": 3, "channels": 2}], "beam_width": 2, "max_epochs": 2
}"#;

fn tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.json");
    std::fs::write(&path, TINY).unwrap();
    path
}

#[test]
fn gen_zero_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty.jsonl");
    ok(&sailx(&["gen", "--count", "0", "--out", p(&out)]));
    assert_eq!(std::fs::read(&out).unwrap(), b"");
}

#[test]
fn gen_is_deterministic_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    ok(&sailx(&["gen", "--count", "25", "--mix", "sail", "--seed", "7", "--out", p(&a)]));
    ok(&sailx(&["gen", "--count", "25", "--mix", "sail", "--seed", "7", "--out", p(&b)]));
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(bytes.iter().filter(|&&c| c == b'\n').count(), 25);

    let m = RunManifest::read(&RunManifest::path_for(&a)).unwrap();
    assert_eq!(m.seed, 7);
    assert_eq!(m.artifacts, std::slice::from_ref(&a));
    std::fs::remove_file(&a).unwrap();
    let args: Vec<&str> = m.args.iter().map(String::as_str).collect();
    ok(&sailx(&args));
    assert_eq!(std::fs::read(&a).unwrap(), bytes);
}

#[test]
fn seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("env.jsonl");
    let b = dir.path().join("flag.jsonl");
    let out = Command::new(env!("CARGO_BIN_EXE_sailx"))
        .args(["gen", "--count", "5", "--out", p(&a)])
        .env("SAILX_SEED", "31")
        .output()
        .unwrap();
    ok(&out);
    ok(&sailx(&["gen", "--count", "5", "--seed", "31", "--out", p(&b)]));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn bad_mix_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mix = dir.path().join("mix.json");
    std::fs::write(&mix, r#"{"Dancing": 1.0}"#).unwrap();
    let out = sailx(&["gen", "--count", "3", "--mix", p(&mix), "--out", p(&dir.path().join("x.jsonl"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Dancing"));

    let out = sailx(&["gen", "--count", "3", "--mix", "/no/such/mix.json", "--out", p(&dir.path().join("y.jsonl"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_files_exit_2() {
    let out = sailx(&["eval", "--data", "/no/such.jsonl", "--checkpoint", "/no/such.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = sailx(&["render", "--map", "/no/such/map.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = sailx(&["gen", "--out", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(2), "missing --count");
    let out = sailx(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn split_train_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data.jsonl");
    let cfg = tiny_config(d);
    ok(&sailx(&["gen", "--count", "60", "--mix", "LanguageOnly", "--seed", "3", "--out", p(&data)]));
    ok(&sailx(&["split", "--data", p(&data), "--out-dir", p(&d.join("parts")), "--seed", "1"]));
    let split: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("parts/split.json")).unwrap()).unwrap();
    assert_eq!(split["train"].as_array().unwrap().len(), 42);
    assert_eq!(split["dev"].as_array().unwrap().len(), 9);

    let ckpt = d.join("model.json");
    let train = sailx(&[
        "train",
        "--data",
        p(&d.join("parts/train.jsonl")),
        "--dev",
        p(&d.join("parts/dev.jsonl")),
        "--variant",
        "full",
        "--config",
        p(&cfg),
        "--seed",
        "2",
        "--out-checkpoint",
        p(&ckpt),
    ]);
    ok(&train);
    assert!(d.join("model.config.json").exists());
    let log = std::fs::read_to_string(d.join("model.log.csv")).unwrap();
    assert!(log.starts_with("epoch,trainLoss,trainAccuracy,devSuccess,maxClippedNorm\n"));
    assert_eq!(log.lines().count(), 3);
    assert!(RunManifest::path_for(&ckpt).exists());

    let test = d.join("parts/test.jsonl");
    let single = sailx(&["eval", "--data", p(&test), "--checkpoint", p(&ckpt), "--mode", "single"]);
    ok(&single);
    let ensemble = sailx(&["eval", "--data", p(&test), "--checkpoint", p(&ckpt), p(&ckpt), p(&ckpt), "--mode", "single"]);
    ok(&ensemble);
    let first = |o: &Output| String::from_utf8_lossy(&o.stdout).lines().next().unwrap().to_string();
    assert!(first(&single).starts_with("success "));
    assert_eq!(first(&single), first(&ensemble));

    let results = d.join("eval.json");
    ok(&sailx(&["eval", "--data", p(&test), "--checkpoint", p(&ckpt), "--mode", "paragraph", "--beam", "1", "--out", p(&results)]));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&results).unwrap()).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 9);
    assert_eq!(v["mode"], "paragraph");
}

#[test]
fn non_finite_training_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data.jsonl");
    ok(&sailx(&["gen", "--count", "10", "--mix", "LanguageOnly", "--out", p(&data)]));
    let cfg = d.join("explode.json");
    std::fs::write(&cfg, r#"{"embed_dim": 4, "enc_hidden": 4, "attn_hidden": 4, "channels": 2, "filter_width": 3,
        "extra_convs": [], "lr": 1e308, "clip": 1e308, "max_epochs": 3}"#)
    .unwrap();
    let out = sailx(&["train", "--data", p(&data), "--config", p(&cfg), "--out-checkpoint", p(&d.join("m.json"))]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bench_reports_cap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let report = dir.path().join("bench.json");
    let out = sailx(&[
        "bench", "--mix", "sail", "--cap", "200", "--eval-batch", "50", "--config", p(&cfg), "--out", p(&report),
    ]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("cap exceeded"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["capExceeded"], true);
    assert_eq!(v["instancesSeen"], 200);
    assert_eq!(v["movingAverage"].as_array().unwrap().len(), 4);
    assert!(v["instancesToThreshold"].is_null());
}

#[test]
fn hpo_and_experiment_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = tiny_config(d);
    let data = d.join("data.jsonl");
    ok(&sailx(&["gen", "--count", "40", "--mix", "uniform", "--seed", "9", "--out", p(&data)]));
    ok(&sailx(&["split", "--data", p(&data), "--out-dir", p(d)]));
    let hpo = d.join("hpo.json");
    ok(&sailx(&[
        "hpo", "--param", "lr", "--lo", "1e-4", "--hi", "1e-1", "--data", p(&d.join("train.jsonl")), "--dev",
        p(&d.join("dev.jsonl")), "--config", p(&cfg), "--evals", "3", "--out", p(&hpo),
    ]));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&hpo).unwrap()).unwrap();
    let x = v["x"].as_f64().unwrap();
    assert!((1e-4..=1e-1).contains(&x));
    assert_eq!(v["evaluations"], 3);

    let table = d.join("table.csv");
    ok(&sailx(&[
        "experiment", "--data", p(&data), "--split", p(&d.join("split.json")), "--variants", "lo,full", "--ensembles", "2",
        "--config", p(&cfg), "--out", p(&table),
    ]));
    let csv = std::fs::read_to_string(&table).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(2).unwrap().starts_with("full,2,"));
}

#[test]
fn render_formats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("one.jsonl");
    ok(&sailx(&["gen", "--count", "2", "--seed", "4", "--out", p(&data)]));
    let out = sailx(&["render", "--map", p(&data), "--index", "1", "--path", "gold"]);
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 17);
    assert!(lines.iter().all(|l| l.chars().count() == 17));

    let map = d.join("map.json");
    let inst = sailx::formats::read_instances(&data).unwrap().remove(0);
    sailx::formats::write_map(&map, &inst.world).unwrap();
    assert_eq!(sailx::formats::read_map(&map).unwrap(), inst.world);
    let svg = d.join("map.svg");
    ok(&sailx(&["render", "--map", p(&map), "--format", "svg", "--start", "0,0,east", "--path", "LEFT,MOVE", "--out", p(&svg)]));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let out = sailx(&["render", "--map", p(&map), "--path", "MOVE"]);
    assert_eq!(out.status.code(), Some(2), "a path without a start pose");
}
