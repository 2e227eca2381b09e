use std::path::Path;
use std::process::{Command, Output};

fn nirsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nirsc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = nirsc(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_then_split_gives_reference_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let stdout = ok(&["synth", "--output", p(&data)]);
    assert!(stdout.contains("971 records (586 non-cancer, 385 cancer)"));
    let split = dir.path().join("split");
    let stdout = ok(&[
        "split",
        "--dataset",
        p(&data),
        "--test-fraction",
        "0.2",
        "--folds",
        "5",
        "--output",
        p(&split),
    ]);
    assert_eq!(stdout.trim(), "train 776 / test 195");
    assert!(split.join("folds.json").exists());
}

#[test]
fn missing_dataset_is_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("split");
    let o = nirsc(&["split", "--dataset", "/no/such/file.csv", "--output", p(&out)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("InvalidConfig"));
    assert!(!out.exists());
}

#[test]
fn failed_run_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    ok(&["synth", "--output", p(&data)]);
    let out = dir.path().join("cv");
    // 125 channels cannot hold 200 windows; the failure happens after the dataset loads.
    let o = nirsc(&[
        "cv",
        "--dataset",
        p(&data),
        "--window-count",
        "200",
        "--n-trees",
        "2",
        "--output",
        p(&out),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("InvalidConfig"));
    assert!(!out.exists());
}

#[test]
fn feature_arm_rejects_skipping_snv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"preprocessing":"snv_features","apply_snv":false}"#).unwrap();
    let o = nirsc(&["cv", "--config", p(&cfg), "--output", p(dir.path())]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("InvalidConfig"));
}

#[test]
fn cv_is_idempotent_and_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    ok(&["synth", "--output", p(&data)]);
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"preprocessing":"snv_features","augmentation":"gan","gan":{"epochs":80},"gbdt":{"n_trees":15,"max_depth":3},"folds":3}"#,
    )
    .unwrap();
    let run = |name: &str, jobs: &str| {
        let out = dir.path().join(name);
        let stdout = ok(&[
            "--jobs",
            jobs,
            "cv",
            "--config",
            p(&cfg),
            "--dataset",
            p(&data),
            "--output",
            p(&out),
        ]);
        (stdout, std::fs::read(out.join("report.json")).unwrap())
    };
    let (text, a) = run("a", "1");
    assert!(text.contains("gbdt III-c") && text.contains(" ± "));
    let (_, b) = run("b", "1");
    let (_, c) = run("c", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn tune_train_predict_explain_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let run = |args: &[&str], extra: &[&str]| ok(&[args, extra].concat());
    let (data, train, test) = (d("data.csv"), d("split/train.csv"), d("split/test.csv"));
    ok(&["synth", "--output", &data]);
    ok(&["split", "--dataset", &data, "--output", &d("split")]);
    let common = ["--dataset", train.as_str(), "--folds", "3", "--n-trees", "10"];

    run(&["tune", "--budget", "3", "--output", &d("tune")], &common);
    let history = std::fs::read_to_string(d("tune/history.csv")).unwrap();
    assert!(history.starts_with("trial,params,objective"));
    assert_eq!(history.lines().count(), 4);

    let table = run(
        &[
            "train",
            "--params",
            &d("tune/best.json"),
            "--test",
            &test,
            "--output",
            &d("model"),
        ],
        &common,
    );
    assert!(table.contains("(held-out test set)"));

    let (model, preds) = (d("model/model.json"), d("preds.csv"));
    let stdout = ok(&["predict", "--model", &model, "--dataset", &test, "--output", &preds]);
    assert!(stdout.starts_with("195 predictions"));
    assert_eq!(std::fs::read_to_string(&preds).unwrap().lines().count(), 196);

    ok(&[
        "explain",
        "--model",
        &model,
        "--background",
        &train,
        "--dataset",
        &test,
        "--permutations",
        "4",
        "--background-size",
        "10",
        "--output",
        &d("explain"),
    ]);
    let ranking = std::fs::read_to_string(d("explain/ranking.csv")).unwrap();
    assert!(ranking.starts_with("rank,feature,mean_abs_attribution"));
    assert_eq!(
        std::fs::read_to_string(d("explain/attributions.csv"))
            .unwrap()
            .lines()
            .count(),
        196
    );

    run(&["cv", "--preprocessing", "raw", "--output", &d("cv-raw")], &common);
    let text = ok(&[
        "report",
        "--input",
        &d("tune/report.json"),
        "--input",
        &d("cv-raw/report.json"),
        "--output",
        &d("report"),
    ]);
    assert_eq!(text.lines().count(), 5);
    assert_eq!(
        std::fs::read_to_string(d("report/table.md")).unwrap().lines().count(),
        4
    );

    let o = nirsc(&[
        "report",
        "--input",
        &d("tune/report.json"),
        "--input",
        &d("model/test.json"),
        "--output",
        &d("mixed"),
    ]);
    assert!(!o.status.success());
    assert!(!Path::new(&d("mixed")).exists());
}
