use std::path::Path;
use std::process::{Command, Output};

use qcascade::svm::SvmModel;

const SMALL: &str = "c_grid = 1\ngamma_grid = 0.1\ntune_rows = 0\nfeatsel_repeats = 2\n";

fn qc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcascade"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn qcascade")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn small_config(dir: &Path) {
    std::fs::write(dir.join("small.cfg"), SMALL).unwrap();
}

#[test]
fn gen_is_deterministic_and_has_64_columns() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        ok(&qc(dir.path(), &["--seed", "5", "gen", "--kind", "W", "--n", "40", "--output", name]));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert!(dir.path().join("a.meta.json").exists());

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 64);
    assert_eq!(header[0], "IIX");
    assert_eq!(header[63], "label");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| r.split(',').count() == 64));

    ok(&qc(dir.path(), &["--seed", "6", "gen", "--kind", "W", "--n", "40", "--output", "c.csv"]));
    assert_ne!(text.as_bytes(), std::fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qc(dir.path(), &["gen", "--kind", "Q", "--n", "10"]).status.code(), Some(2));
    assert_eq!(qc(dir.path(), &["gen", "--kind", "W", "--n", "0"]).status.code(), Some(2));
    assert_eq!(qc(dir.path(), &["frobnicate"]).status.code(), Some(2));
    let noise = [
        "noise",
        "--ghz-model",
        "g.json",
        "--w-model",
        "w.json",
        "--b-model",
        "b.json",
        "--strengths",
    ];
    assert_eq!(qc(dir.path(), &noise).status.code(), Some(2));
    let mut bad = noise.to_vec();
    bad.push("1.5");
    assert_eq!(qc(dir.path(), &bad).status.code(), Some(2));
    std::fs::write(dir.path().join("bad.cfg"), "n_w = 3\n").unwrap();
    let out = qc(dir.path(), &["--config", "bad.cfg", "gen", "--kind", "W"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = qc(dir.path(), &["train", "--kind", "W", "--data", "missing.csv"]);
    assert_eq!(out.status.code(), Some(1));
    ok(&qc(dir.path(), &["gen", "--kind", "B", "--n", "20", "--output", "b.csv"]));
    let out = qc(dir.path(), &["train", "--kind", "W", "--data", "b.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected W"));
}

#[test]
fn train_eval_and_rank_on_small_w_set() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    small_config(p);
    let base = ["--config", "small.cfg", "--out", "run"];
    let with = |extra: &[&str]| -> Vec<String> { base.iter().chain(extra).map(|s| s.to_string()).collect() };
    let run = |args: Vec<String>| qc(p, &args.iter().map(String::as_str).collect::<Vec<_>>());

    ok(&run(with(&["gen", "--kind", "W", "--n", "300"])));
    ok(&run(with(&["train", "--kind", "W", "--data", "run/W.csv"])));

    let model_path = p.join("run/model_W.json");
    let model = SvmModel::load(&model_path).unwrap();
    assert_eq!(model.kind, "W");
    let again = p.join("copy.json");
    model.save(&again).unwrap();
    assert_eq!(SvmModel::load(&again).unwrap(), model);

    let metrics = std::fs::read_to_string(p.join("run/metrics_W.csv")).unwrap();
    let cfg = qcascade::pipeline::ExperimentConfig::parse(SMALL).unwrap();
    assert_eq!(metrics.lines().next().unwrap(), format!("# config_hash={} seed=42", cfg.hash()));
    assert!(metrics.contains("test,accuracy"));

    ok(&run(with(&["eval", "--model", "run/model_W.json", "--data", "run/W.csv"])));
    assert!(p.join("run/eval_W.csv").exists());

    ok(&run(with(&["rank", "--model", "run/model_W.json", "--data", "run/W.csv"])));
    let rank: qcascade::pipeline::RankFile = qcascade::pipeline::read_json(&p.join("run/rank_W.json")).unwrap();
    assert_eq!(rank.order.len(), 63);
    assert_eq!(rank.curve.len(), 63);
}

#[test]
fn full_pipeline_on_tiny_sets() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("tiny.cfg"), format!("{SMALL}n_cascade = 80\nood_samples = 10\n")).unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["--config", "tiny.cfg", "--out", "o", "--seed", "11"];
        args.extend_from_slice(extra);
        let out = qc(p, &args);
        ok(&out);
        out
    };
    for k in ["GHZ", "W", "B"] {
        run(&["gen", "--kind", k, "--n", "200"]);
        let data = format!("o/{k}.csv");
        run(&["train", "--kind", k, "--data", &data]);
        run(&["rank", "--model", &format!("o/model_{k}.json"), "--data", &data]);
    }
    let models = ["--ghz-model", "o/model_GHZ.json", "--w-model", "o/model_W.json", "--b-model", "o/model_B.json"];
    let with = |cmd: &'static str, extra: &[&'static str]| -> Vec<&'static str> {
        let mut v = vec![cmd];
        v.extend_from_slice(&models);
        v.extend_from_slice(extra);
        v
    };

    run(&with("cascade-eval", &[]));
    let confusion = std::fs::read_to_string(p.join("o/cascade_confusion.csv")).unwrap();
    assert!(confusion.starts_with("# config_hash="));
    let bundle = qcascade::cascade::CascadeModel::load(&p.join("o/cascade_bundle.json")).unwrap();
    assert_eq!(bundle.m_w, SvmModel::load(&p.join("o/model_W.json")).unwrap());

    run(&with("ood", &["--families", "UPB,HORODECKI"]));
    let report = std::fs::read_to_string(p.join("o/ood_report.csv")).unwrap();
    assert!(report.contains("UPB") && report.contains("HORODECKI") && !report.contains("EDGE"));

    run(&with("noise", &["--kinds", "DEPOLARIZING", "--strengths", "0,0.3"]));
    let noise = std::fs::read_to_string(p.join("o/noise_sweep.csv")).unwrap();
    assert_eq!(noise.lines().count(), 4);

    run(&["consensus", "--ghz", "o/rank_GHZ.json", "--w", "o/rank_W.json", "--b", "o/rank_B.json"]);
    let consensus = std::fs::read_to_string(p.join("o/consensus.csv")).unwrap();
    assert_eq!(consensus.lines().count(), 65);

    let mut abl = with("ablation", &["--consensus", "o/consensus.json", "--ks", "1,5"]);
    abl.extend_from_slice(&["--ghz-data", "o/GHZ.csv", "--w-data", "o/W.csv", "--b-data", "o/B.csv"]);
    run(&abl);
    let table = std::fs::read_to_string(p.join("o/ablation.csv")).unwrap();
    assert_eq!(table.lines().nth(1), Some("feature_name,acc_B,acc_W,acc_GHZ,acc_cascade"));
    assert_eq!(table.lines().count(), 4);

    let out = qc(p, &["consensus", "--ghz", "o/rank_W.json", "--w", "o/rank_W.json", "--b", "o/rank_B.json"]);
    assert_eq!(out.status.code(), Some(1));
}
