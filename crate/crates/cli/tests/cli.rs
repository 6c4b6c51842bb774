use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hetmatch::eval::study_configs;

fn hetmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetmatch"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = hetmatch(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Synthetic corpus indexed under `dir/idx`; returns the labels path.
fn setup(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    ok(&["synth", "--seed", "1", "--out", p(&data)]);
    ok(&[
        "index",
        "--corpus",
        p(&data.join("articles.jsonl")),
        "--doctype",
        "A",
        "--out",
        p(&dir.join("idx/a")),
    ]);
    ok(&[
        "index",
        "--corpus",
        p(&data.join("videos.jsonl")),
        "--doctype",
        "video",
        "--out",
        p(&dir.join("idx/b")),
    ]);
    data.join("labels.jsonl")
}

#[test]
fn match_prints_tab_separated_ranking() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let w = dir.path().join("w.json");
    std::fs::write(&w, study_configs::<f64>()[0].1.to_json_pretty()).unwrap();
    let out = ok(&[
        "match",
        "--index",
        p(&dir.path().join("idx")),
        "--a-id",
        "a010",
        "--weights",
        p(&w),
        "--top",
        "3",
    ]);
    let scores: Vec<f64> = out
        .lines()
        .map(|l| {
            let (id, s) = l.split_once('\t').unwrap();
            assert!(id.starts_with('b'));
            s.parse().unwrap()
        })
        .collect();
    assert_eq!(scores.len(), 3);
    assert!(scores.windows(2).all(|x| x[0] >= x[1]));
}

#[test]
fn eval_renders_five_study_columns() {
    let dir = tempfile::tempdir().unwrap();
    let labels = setup(dir.path());
    let paths: Vec<String> = study_configs::<f64>()
        .iter()
        .map(|(name, cfg)| {
            let path = dir.path().join(format!("model{name}.json"));
            std::fs::write(&path, cfg.to_json_pretty()).unwrap();
            p(&path).to_string()
        })
        .collect();
    let out = ok(&[
        "eval",
        "--weights",
        &paths.join(","),
        "--labels",
        p(&labels),
        "--index",
        p(&dir.path().join("idx")),
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0].split_whitespace().collect::<Vec<_>>(),
        ["Model", "model1", "model2", "model3", "model4", "model5"]
    );
    let last = lines.last().unwrap();
    assert!(last.starts_with("Accuracy (%)"), "{last}");
    assert_eq!(last.split_whitespace().count(), 7);
}

#[test]
fn trained_config_reevaluates_to_reported_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let labels = setup(dir.path());
    let idx = dir.path().join("idx");
    let grid = dir.path().join("grid.json");
    std::fs::write(
        &grid,
        r#"{"title>title": [0, 4], "summary>summary": [0, 1], "*": [1], "a_components": ["title", "summary", "content"], "b_components": ["title", "summary", "credits"]}"#,
    )
    .unwrap();
    for (mode, extra) in [("grid", vec!["--grid", p(&grid)]), ("sgd", vec![])] {
        let out_w = dir.path().join(format!("{mode}.json"));
        let report = dir.path().join(format!("{mode}-report.json"));
        let mut args = vec![
            "train",
            "--mode",
            mode,
            "--labels",
            p(&labels),
            "--index",
            p(&idx),
            "--out",
            p(&out_w),
        ];
        args.extend(["--report", p(&report)]);
        args.extend(extra);
        ok(&args);
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        let claimed = report["best_accuracy"].as_f64().unwrap();
        let out = ok(&[
            "eval",
            "--weights",
            p(&out_w),
            "--labels",
            p(&labels),
            "--index",
            p(&idx),
        ]);
        let acc: f64 = out
            .lines()
            .last()
            .unwrap()
            .split_whitespace()
            .last()
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(format!("{acc:.1}"), format!("{claimed:.1}"), "{mode}");
    }
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "synth",
        "--seed",
        "3",
        "--out",
        p(&dir.path().join("x")),
        "--n-a",
        "10",
        "--n-b",
        "10",
        "--planted",
        "4",
    ]);
    ok(&[
        "synth",
        "--seed",
        "3",
        "--out",
        p(&dir.path().join("y")),
        "--n-a",
        "10",
        "--n-b",
        "10",
        "--planted",
        "4",
    ]);
    for f in ["articles.jsonl", "videos.jsonl", "labels.jsonl"] {
        assert_eq!(
            std::fs::read(dir.path().join("x").join(f)).unwrap(),
            std::fs::read(dir.path().join("y").join(f)).unwrap()
        );
    }
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out = hetmatch(&[
        "index",
        "--corpus",
        p(&missing),
        "--doctype",
        "A",
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("hetmatch: "));

    assert!(!hetmatch(&["match", "--bogus"]).status.success());
    assert!(
        !hetmatch(&["train", "--mode", "grid", "--labels", "x", "--index", "y", "--out", "z"])
            .status
            .success()
    );
    let labels = setup(dir.path());
    let out = hetmatch(&[
        "train",
        "--mode",
        "grid",
        "--labels",
        p(&labels),
        "--index",
        p(&dir.path().join("idx")),
        "--out",
        "z",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("--grid"));
}
